"""Synthetic planted-inconsistency corpus and its Bayes oracle.

Real articles draw one latent topic vector; body words, caption words,
and object features are noisy linear images of it, and captions mention
a body entity with probability q_match. Generated articles (the
real-captions analog) keep image and caption tied to one latent but draw
the body from an independent latent, with entity overlap probability
q_mismatch. Because the generative densities are known exactly, the
Bayes-optimal accuracy can be estimated by Monte Carlo and used as a
ceiling for trained models.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Label, write_feature_blob, write_manifest
from .errors import SchemaError

SPLITS = (("train", 0.0, 0.7), ("val", 0.7, 0.85), ("test", 0.85, 1.0))
# Share of articles carrying 1, 2 and 3 image-caption pairs.
PAIR_COUNT_PROBS = (0.608, 0.210, 0.182)


@dataclass
class SynthConfig:
    n_articles: int = 2000
    d_text: int = 10
    d_image: int = 12
    latent_k: int = 4
    sigma: float = 2.5
    sigma_art: float | None = None  # per-channel overrides; None -> sigma
    sigma_cap: float | None = None
    sigma_obj: float | None = None
    q_match: float = 0.92
    q_mismatch: float = 0.05
    n_topics: int = 20
    entity_pool: int = 12
    pair_count_probs: tuple[float, float, float] = PAIR_COUNT_PROBS
    sentences_range: tuple[int, int] = (2, 4)
    words_range: tuple[int, int] = (4, 8)
    caption_words_range: tuple[int, int] = (4, 7)
    objects_range: tuple[int, int] = (5, 9)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.q_mismatch < self.q_match <= 1.0:
            raise SchemaError(
                f"need 0 <= q_mismatch < q_match <= 1, got "
                f"{self.q_mismatch} / {self.q_match}"
            )
        if self.sigma <= 0:
            raise SchemaError("sigma must be positive")
        if abs(sum(self.pair_count_probs) - 1.0) > 1e-6:
            raise SchemaError("pair_count_probs must sum to 1")

    @property
    def sigmas(self) -> tuple[float, float, float]:
        return (
            self.sigma_art if self.sigma_art is not None else self.sigma,
            self.sigma_cap if self.sigma_cap is not None else self.sigma,
            self.sigma_obj if self.sigma_obj is not None else self.sigma,
        )

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise SchemaError(f"unknown synth config keys: {sorted(unknown)}")
        obj = dict(obj)
        for key in ("pair_count_probs", "sentences_range", "words_range",
                    "caption_words_range", "objects_range"):
            if key in obj:
                obj[key] = tuple(obj[key])
        return cls(**obj)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def mixing_matrices(config: SynthConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The dataset-wide latent-to-feature maps, reproducible from the seed."""
    rng = np.random.default_rng([config.seed, 1])
    k = config.latent_k
    scale = 1.0 / np.sqrt(k)
    m_art = rng.standard_normal((config.d_text, k)) * scale
    m_cap = rng.standard_normal((config.d_text, k)) * scale
    m_obj = rng.standard_normal((config.d_image, k)) * scale
    return m_art, m_cap, m_obj


@dataclass
class SynthArticle:
    label: Label
    sentences: list[np.ndarray]
    body_entities: list[str]
    pairs: list[dict]  # caption [n_c, d_text], objects [n_o, d_image], entities, overlap


def _sample_article(
    config: SynthConfig,
    mats: tuple[np.ndarray, np.ndarray, np.ndarray],
    label: Label,
    rng: np.random.Generator,
) -> SynthArticle:
    m_art, m_cap, m_obj = mats
    s_art, s_cap, s_obj = config.sigmas
    k = config.latent_k
    z_art = rng.standard_normal(k)
    z_pair = z_art if label == Label.REAL else rng.standard_normal(k)

    n_sent = int(rng.integers(config.sentences_range[0], config.sentences_range[1] + 1))
    sentences = []
    for _ in range(n_sent):
        n_w = int(rng.integers(config.words_range[0], config.words_range[1] + 1))
        sentences.append(
            (m_art @ z_art)[None, :] + s_art * rng.standard_normal((n_w, config.d_text))
        )

    topic = int(rng.integers(config.n_topics))
    pool = [f"t{topic}_e{j}" for j in range(config.entity_pool)]
    n_body = int(rng.integers(3, min(6, config.entity_pool) + 1))
    body_entities = [pool[i] for i in rng.choice(config.entity_pool, n_body, replace=False)]

    n_pairs = 1 + int(rng.choice(3, p=config.pair_count_probs))
    q = config.q_match if label == Label.REAL else config.q_mismatch
    pairs = []
    for _ in range(n_pairs):
        n_c = int(
            rng.integers(config.caption_words_range[0], config.caption_words_range[1] + 1)
        )
        n_o = int(rng.integers(config.objects_range[0], config.objects_range[1] + 1))
        caption = (m_cap @ z_pair)[None, :] + s_cap * rng.standard_normal((n_c, config.d_text))
        objects = (m_obj @ z_pair)[None, :] + s_obj * rng.standard_normal((n_o, config.d_image))
        overlap = bool(rng.random() < q)
        ents = []
        if overlap:
            n_hit = 1 + int(rng.integers(0, 2))
            ents += [
                body_entities[i]
                for i in rng.choice(len(body_entities), min(n_hit, len(body_entities)), replace=False)
            ]
        # Distractor entities live in a vocabulary never used by bodies,
        # so they cannot flip the indicator.
        n_dis = int(rng.integers(0 if overlap else 1, 3))
        ents += [f"dx_e{int(j)}" for j in rng.integers(0, 64, size=n_dis)]
        pairs.append(
            {"caption": caption, "objects": objects, "entities": ents, "overlap": overlap}
        )
    return SynthArticle(label, sentences, body_entities, pairs)


def sample_articles(config: SynthConfig, n: int, stream: int) -> list[SynthArticle]:
    """Labels alternate real/generated for an exact class balance."""
    mats = mixing_matrices(config)
    rng = np.random.default_rng([config.seed, stream])
    return [
        _sample_article(config, mats, Label.REAL if i % 2 == 0 else Label.GENERATED, rng)
        for i in range(n)
    ]


def generate_synthetic_dataset(config: SynthConfig, out_dir: str | Path) -> dict[str, Path]:
    """Write blobs plus train/val/test manifests (70/15/15); returns the
    manifest path per split. Deterministic given the seed."""
    out = Path(out_dir)
    blob_dir = out / "blobs"
    blob_dir.mkdir(parents=True, exist_ok=True)
    articles = sample_articles(config, config.n_articles, stream=2)
    manifests: dict[str, Path] = {}
    for split, lo, hi in SPLITS:
        lines = []
        for i in range(int(config.n_articles * lo), int(config.n_articles * hi)):
            art = articles[i]
            aid = f"a{i:06d}"
            sent_paths = []
            for j, sent in enumerate(art.sentences):
                rel = f"blobs/{aid}_s{j}.dff"
                write_feature_blob(sent.astype(np.float32), out / rel)
                sent_paths.append(rel)
            pair_lines = []
            for j, pr in enumerate(art.pairs):
                cap_rel = f"blobs/{aid}_p{j}_cap.dff"
                obj_rel = f"blobs/{aid}_p{j}_obj.dff"
                write_feature_blob(pr["caption"].astype(np.float32), out / cap_rel)
                write_feature_blob(pr["objects"].astype(np.float32), out / obj_rel)
                pair_lines.append(
                    {
                        "pair_id": f"{aid}_p{j}",
                        "caption_blob": cap_rel,
                        "objects_blob": obj_rel,
                        "caption_entities": pr["entities"],
                    }
                )
            lines.append(
                {
                    "article_id": aid,
                    "label": int(art.label),
                    "sentences": sent_paths,
                    "body_entities": art.body_entities,
                    "pairs": pair_lines,
                }
            )
        manifests[split] = write_manifest(
            out / f"manifest_{split}.jsonl", config.d_text, config.d_image, split, lines
        )
    with open(out / "synth_config.json", "w", encoding="utf-8") as f:
        json.dump(config.to_dict(), f, sort_keys=True, indent=2)
        f.write("\n")
    return manifests


def _gaussian_logml(
    groups: list[tuple[np.ndarray, np.ndarray, float]], k: int
) -> float:
    """log p of observations sharing one standard-normal latent.

    Each group is (rows [n, d], map [d, k], sigma); every row is an
    independent noisy linear image of the shared latent.
    """
    lam = np.eye(k)
    b = np.zeros(k)
    const = 0.0
    for rows, m, sigma in groups:
        s2 = sigma * sigma
        n = rows.shape[0]
        lam += n * (m.T @ m) / s2
        b += m.T @ rows.sum(axis=0) / s2
        const += (rows * rows).sum() / s2 + n * rows.shape[1] * np.log(2.0 * np.pi * s2)
    sign, logdet = np.linalg.slogdet(lam)
    sol = np.linalg.solve(lam, b)
    return -0.5 * const - 0.5 * logdet + 0.5 * float(b @ sol)


def article_log_likelihood_ratio(
    art: SynthArticle, config: SynthConfig, mats=None
) -> float:
    """log p(features, indicators | real) - log p(... | generated)."""
    if mats is None:
        mats = mixing_matrices(config)
    m_art, m_cap, m_obj = mats
    s_art, s_cap, s_obj = config.sigmas
    k = config.latent_k
    body = [(np.vstack(art.sentences), m_art, s_art)]
    pair_groups = []
    for pr in art.pairs:
        pair_groups.append((pr["caption"], m_cap, s_cap))
        pair_groups.append((pr["objects"], m_obj, s_obj))
    matched = _gaussian_logml(body + pair_groups, k)
    split = _gaussian_logml(body, k) + _gaussian_logml(pair_groups, k)
    qm = min(max(config.q_match, 1e-6), 1.0 - 1e-6)
    qx = min(max(config.q_mismatch, 1e-6), 1.0 - 1e-6)
    entity = 0.0
    for pr in art.pairs:
        if pr["overlap"]:
            entity += np.log(qm / qx)
        else:
            entity += np.log((1.0 - qm) / (1.0 - qx))
    return matched - split + entity


def bayes_oracle_accuracy(config: SynthConfig, n_mc: int = 2000) -> float:
    """Monte-Carlo estimate of the Bayes-optimal detection accuracy."""
    mats = mixing_matrices(config)
    articles = sample_articles(config, n_mc, stream=3)
    correct = 0
    for art in articles:
        llr = article_log_likelihood_ratio(art, config, mats)
        pred_real = llr >= 0.0
        correct += int(pred_real == (art.label == Label.REAL))
    return correct / len(articles)
