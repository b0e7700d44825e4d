"""Accuracy evaluation and the ablation matrix runner."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cca as cca_mod
from . import model as dm
from . import trainer as tr
from .data import Label, Manifest, load_manifest
from .errors import SchemaError
from .synth import SynthConfig, bayes_oracle_accuracy, generate_synthetic_dataset


@dataclass
class EvalReport:
    accuracy: float
    per_class_accuracy: dict[str, float]
    counts: dict[str, int]  # confusion counts keyed true_pred
    mean_score: dict[str, float]
    n: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _report(labels: list[int], scores: list[float], threshold: float) -> EvalReport:
    if not labels:
        raise SchemaError("cannot evaluate an empty manifest")
    y = np.asarray(labels)
    s = np.asarray(scores)
    pred = (s >= threshold).astype(int)
    names = {0: "generated", 1: "real"}
    counts = {
        f"{names[t]}_{names[p]}": int(((y == t) & (pred == p)).sum())
        for t in (0, 1)
        for p in (0, 1)
    }
    per_class = {
        names[t]: float((pred[y == t] == t).mean()) if (y == t).any() else float("nan")
        for t in (0, 1)
    }
    mean_score = {
        names[t]: float(s[y == t].mean()) if (y == t).any() else float("nan")
        for t in (0, 1)
    }
    return EvalReport(
        accuracy=float((pred == y).mean()),
        per_class_accuracy=per_class,
        counts=counts,
        mean_score=mean_score,
        n=len(labels),
    )


def evaluate_accuracy(
    params: dm.DidanParams,
    manifest: Manifest,
    modality_ablation: str = "full",
    use_nei: bool = True,
) -> EvalReport:
    """DIDAN accuracy at threshold 0.5 (ties predicted real)."""
    labels, scores = [], []
    for i in range(len(manifest.records)):
        rec = manifest.load_record(i)
        trace = dm.forward_article(
            rec, params, mode="eval", use_nei=use_nei, ablation=modality_ablation
        )
        labels.append(int(rec.label == Label.REAL))
        scores.append(trace.authenticity)
    return _report(labels, scores, threshold=0.5)


def evaluate_cca(model: cca_mod.CcaModel, manifest: Manifest) -> EvalReport:
    labels, scores = [], []
    for i in range(len(manifest.records)):
        rec = manifest.load_record(i)
        labels.append(int(rec.label == Label.REAL))
        scores.append(cca_mod.cca_score(model, rec))
    return _report(labels, scores, threshold=model.tau)


@dataclass
class AblationCell:
    name: str
    overrides: dict

    @classmethod
    def from_dict(cls, obj: dict) -> "AblationCell":
        extra = set(obj) - {"name", "overrides"}
        if extra:
            raise SchemaError(f"unknown ablation cell keys: {sorted(extra)}")
        return cls(name=obj["name"], overrides=obj.get("overrides", {}))


def run_ablation(
    synth_config: SynthConfig,
    base_train: tr.TrainConfig,
    cells: list[AblationCell],
    out_dir: str | Path,
    with_oracle: bool = True,
    with_cca: bool = False,
    cca_rank: int = 8,
    cca_ridge: float = 1e-3,
) -> dict:
    """Train and evaluate one model per cell on a shared dataset and seed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifests = generate_synthetic_dataset(synth_config, out / "data")
    train_m = load_manifest(manifests["train"])
    val_m = load_manifest(manifests["val"])
    test_m = load_manifest(manifests["test"])
    report: dict = {
        "synth_config": synth_config.to_dict(),
        "base_train_config": tr.resolved_config(base_train),
        "split_sizes": {
            "train": len(train_m.records),
            "val": len(val_m.records),
            "test": len(test_m.records),
        },
        "cells": [],
    }
    if with_oracle:
        report["bayes_oracle_accuracy"] = bayes_oracle_accuracy(synth_config)
    if with_cca:
        cca_model = cca_mod.fit_cca_records(train_m.load_all(), cca_rank, cca_ridge)
        tau, _ = cca_mod.calibrate_threshold(cca_model, val_m.load_all())
        cca_model.tau = tau
        report["cca"] = evaluate_cca(cca_model, test_m).to_dict()
    for cell in cells:
        cfg = tr.TrainConfig.from_dict({**tr.resolved_config(base_train), **cell.overrides})
        cell_dir = out / f"cell_{cell.name}"
        params, _ = tr.train(train_m, cfg, out_dir=cell_dir, val_manifest=val_m)
        cell_report = evaluate_accuracy(
            params, test_m, modality_ablation=cfg.modality_ablation, use_nei=cfg.use_nei
        )
        report["cells"].append(
            {
                "name": cell.name,
                "config": tr.resolved_config(cfg),
                "test": cell_report.to_dict(),
            }
        )
    with open(out / "report.json", "w", encoding="utf-8") as f:
        json.dump(report, f, sort_keys=True, indent=2)
        f.write("\n")
    return report
