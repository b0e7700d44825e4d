"""Minibatch assembly (mismatch negatives, generated-article mixing) and
the end-to-end optimization loop."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import model as dm
from .adam import AdamState, adam_step
from .checkpoint import save_checkpoint
from .data import ArticleRecord, ImageCaptionPair, Label, Manifest
from .errors import NumericalError, SchemaError

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 20
    seed: int = 0
    generated_fraction: float = 0.5
    use_mismatch: bool = True
    use_nei: bool = True
    modality_ablation: str = "full"
    negatives_per_positive: int = 1
    d_vse: int = 512
    hidden: list[int] = field(default_factory=lambda: [512, 128])

    def __post_init__(self):
        if not 0.0 <= self.generated_fraction < 1.0:
            raise SchemaError(
                f"generated_fraction must be in [0, 1), got {self.generated_fraction}"
            )
        if self.batch_size < 2:
            raise SchemaError(f"batch_size must be at least 2, got {self.batch_size}")
        if self.negatives_per_positive < 0:
            raise SchemaError("negatives_per_positive must be >= 0")
        if self.modality_ablation not in dm.ABLATIONS:
            raise SchemaError(
                f"modality_ablation must be one of {dm.ABLATIONS}, got {self.modality_ablation!r}"
            )
        if len(self.hidden) != 2:
            raise SchemaError("hidden must list exactly two layer widths")

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise SchemaError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**obj)


@dataclass
class TrainExample:
    record: ArticleRecord
    pairs: list[ImageCaptionPair]
    label: int  # effective label: 1 only for real articles with their own pairs
    is_mismatch: bool = False

    def triple(self):
        return (self.record, self.pairs, self.record.body_entities)


def sample_mismatch_negatives(
    batch: list[ArticleRecord], k: int, rng: np.random.Generator
) -> list[TrainExample]:
    """For each real article, k negatives carrying another batch member's
    pairs; the entity indicator is later recomputed against the receiving
    article's body."""
    if k == 0:
        return []
    if len(batch) < 2:
        raise SchemaError("mismatch sampling needs a batch of at least 2 articles")
    out = []
    for i, rec in enumerate(batch):
        if rec.label != Label.REAL:
            continue
        for _ in range(k):
            j = int(rng.integers(0, len(batch) - 1))
            if j >= i:
                j += 1
            out.append(TrainExample(rec, batch[j].pairs, label=0, is_mismatch=True))
    return out


def build_batch(
    records: list[ArticleRecord], config: TrainConfig, rng: np.random.Generator
) -> list[TrainExample]:
    if not records:
        raise SchemaError("cannot build a batch from zero records")
    examples = [
        TrainExample(r, r.pairs, label=int(r.label == Label.REAL)) for r in records
    ]
    if config.use_mismatch:
        examples += sample_mismatch_negatives(
            records, config.negatives_per_positive, rng
        )
    if all(e.label == 1 for e in examples):
        log.warning(
            "batch contains positives only (generated_fraction=0 and no mismatch "
            "negatives): no learning signal"
        )
    return examples


def select_training_pool(
    records: list[ArticleRecord], generated_fraction: float, rng: np.random.Generator
) -> list[ArticleRecord]:
    """All real articles plus enough generated ones to make up the fraction."""
    reals = [r for r in records if r.label == Label.REAL]
    gens = [r for r in records if r.label == Label.GENERATED]
    if generated_fraction == 0.0:
        return reals
    want = int(round(generated_fraction / (1.0 - generated_fraction) * len(reals)))
    if want < len(gens):
        order = rng.permutation(len(gens))
        gens = [gens[i] for i in order[:want]]
    return reals + gens


def batch_loss(
    examples: list[TrainExample], params: dm.DidanParams, config: TrainConfig
) -> tuple[ad.Node, dm.BatchForward]:
    fwd = dm.forward_examples(
        [e.triple() for e in examples],
        params,
        training=True,
        use_nei=config.use_nei,
        ablation=config.modality_ablation,
    )
    losses = [dm.bce_loss(p, e.label) for p, e in zip(fwd.p_articles, examples)]
    total = ad.sum_all(ad.stack_rows(losses)) if len(losses) > 1 else losses[0]
    return total, fwd


def _step(examples, params, config, state) -> tuple[float, int, int]:
    loss, fwd = batch_loss(examples, params, config)
    if not np.isfinite(loss.value[0]):
        raise NumericalError(
            f"non-finite loss on batch of {len(examples)} examples at step {state.t + 1}"
        )
    grads_by_id = ad.backward(loss, wrt=fwd.nodes.values())
    grads = {name: grads_by_id[id(node)] for name, node in fwd.nodes.items()}
    adam_step(params.weights, grads, state)
    correct = sum(
        int((p.value[0] >= 0.5) == (e.label == 1))
        for p, e in zip(fwd.p_articles, examples)
    )
    return float(loss.value[0]), correct, len(examples)


def evaluate_split(
    records: list[ArticleRecord], params: dm.DidanParams, config: TrainConfig
) -> tuple[float, float]:
    """(mean per-example BCE, accuracy) in eval mode at threshold 0.5."""
    total_loss = 0.0
    correct = 0
    for rec in records:
        trace = dm.forward_article(
            rec,
            params,
            mode="eval",
            use_nei=config.use_nei,
            ablation=config.modality_ablation,
        )
        y = int(rec.label == Label.REAL)
        p = min(max(trace.authenticity, dm.BCE_CLAMP), 1.0 - dm.BCE_CLAMP)
        total_loss += -(y * np.log(p) + (1 - y) * np.log(1.0 - p))
        correct += int((trace.authenticity >= 0.5) == (y == 1))
    n = max(len(records), 1)
    return total_loss / n, correct / n


def train(
    manifest: Manifest,
    config: TrainConfig,
    out_dir: str | Path | None = None,
    val_manifest: Manifest | None = None,
) -> tuple[dm.DidanParams, list[dict]]:
    """Optimize DIDAN on a manifest; deterministic for a fixed seed.

    Writes last.ddn every epoch (plus best.ddn on validation improvement)
    and metrics.jsonl when out_dir is given.
    """
    rng = np.random.default_rng(config.seed)
    records = manifest.load_all()
    val_records = val_manifest.load_all() if val_manifest is not None else None
    params = dm.DidanParams.init(
        rng, manifest.d_text, manifest.d_image, config.d_vse, tuple(config.hidden)
    )
    state = AdamState(lr=config.lr)
    pool = select_training_pool(records, config.generated_fraction, rng)
    if not pool:
        raise SchemaError("training pool is empty")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.jsonl").unlink(missing_ok=True)
    metrics: list[dict] = []
    best_val = -1.0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(pool))
        loss_sum = 0.0
        correct = 0
        seen = 0
        for start in range(0, len(pool), config.batch_size):
            chunk = [pool[i] for i in order[start : start + config.batch_size]]
            if len(chunk) < 2:
                continue  # BatchNorm needs at least 2 rows
            examples = build_batch(chunk, config, rng)
            loss, c, n = _step(examples, params, config, state)
            loss_sum += loss
            correct += c
            seen += n
        row = {
            "epoch": epoch,
            "split": "train",
            "loss": loss_sum / max(seen, 1),
            "accuracy": correct / max(seen, 1),
        }
        metrics.append(row)
        if val_records is not None:
            vloss, vacc = evaluate_split(val_records, params, config)
            vrow = {"epoch": epoch, "split": "val", "loss": vloss, "accuracy": vacc}
            metrics.append(vrow)
            if out is not None and vacc > best_val:
                best_val = vacc
                save_checkpoint(out / "best.ddn", _checkpoint_tensors(params, state))
        if out is not None:
            save_checkpoint(out / "last.ddn", _checkpoint_tensors(params, state))
            with open(out / "metrics.jsonl", "a", encoding="utf-8") as f:
                for m in metrics[-2 if val_records is not None else -1 :]:
                    f.write(json.dumps(m, sort_keys=True) + "\n")
        log.info("epoch %d: %s", epoch, row)
    return params, metrics


def _checkpoint_tensors(params: dm.DidanParams, state: AdamState) -> dict:
    tensors = params.to_tensors()
    tensors["adam.t"] = np.array([state.t], dtype=np.float32)
    for k, v in state.m.items():
        tensors[f"adam.m.{k}"] = v
    for k, v in state.v.items():
        tensors[f"adam.v.{k}"] = v
    return tensors


def resolved_config(config: TrainConfig) -> dict:
    return asdict(replace(config))
