"""Canonical correlation baseline between article features and
concatenated image+caption features, fit on positive samples only."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .checkpoint import load_checkpoint, save_checkpoint
from .data import ArticleRecord, Label
from .errors import NumericalError, SchemaError


@dataclass
class CcaModel:
    u: np.ndarray  # [d_a, r], whitens the article view
    v: np.ndarray  # [d_b, r]
    mean_a: np.ndarray
    mean_b: np.ndarray
    rho: np.ndarray  # [r], descending in [0, 1]
    tau: float = 0.0

    def to_tensors(self) -> dict[str, np.ndarray]:
        return {
            "cca.u": self.u,
            "cca.v": self.v,
            "cca.mean_a": self.mean_a,
            "cca.mean_b": self.mean_b,
            "cca.rho": self.rho,
            "cca.tau": np.array([self.tau], dtype=np.float32),
        }

    @classmethod
    def from_tensors(cls, t: dict[str, np.ndarray]) -> "CcaModel":
        return cls(
            u=t["cca.u"],
            v=t["cca.v"],
            mean_a=t["cca.mean_a"],
            mean_b=t["cca.mean_b"],
            rho=t["cca.rho"],
            tau=float(t["cca.tau"][0]),
        )

    def save(self, path) -> None:
        save_checkpoint(path, self.to_tensors())

    @classmethod
    def load(cls, path) -> "CcaModel":
        return cls.from_tensors(load_checkpoint(path))


def article_vector(record: ArticleRecord) -> np.ndarray:
    """Two-level mean of the raw word embeddings (no learned projection)."""
    sent_means = [s.mean(axis=0) for s in record.sentences]
    return np.mean(sent_means, axis=0)


def build_views(record: ArticleRecord) -> tuple[np.ndarray, list[np.ndarray]]:
    """One article vector plus one [mean objects || mean caption words]
    vector per image-caption pair."""
    a = article_vector(record)
    bs = [
        np.concatenate([p.object_feats.mean(axis=0), p.caption_words.mean(axis=0)])
        for p in record.pairs
    ]
    return a, bs


def collect_views(records: list[ArticleRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-pair view rows; multi-pair articles repeat their article row."""
    rows_a, rows_b = [], []
    for rec in records:
        a, bs = build_views(rec)
        for b in bs:
            rows_a.append(a)
            rows_b.append(b)
    return np.asarray(rows_a, dtype=np.float64), np.asarray(rows_b, dtype=np.float64)


def _inv_sqrt(sym: np.ndarray) -> np.ndarray:
    evals, evecs = scipy.linalg.eigh(sym)
    if evals[0] <= 1e-12:
        raise NumericalError(
            f"covariance is rank-deficient beyond ridge repair (min eigenvalue {evals[0]:.3e})"
        )
    return (evecs / np.sqrt(evals)) @ evecs.T


def fit_cca(a: np.ndarray, b: np.ndarray, r: int, ridge: float = 1e-3) -> CcaModel:
    """Regularized CCA via whitening + SVD of the cross-covariance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = a.shape[0]
    if b.shape[0] != n:
        raise SchemaError(f"view row counts differ: {a.shape} vs {b.shape}")
    if n < r + 1:
        raise SchemaError(f"need at least r+1={r + 1} samples for rank {r}, got {n}")
    if ridge < 0:
        raise SchemaError("ridge must be >= 0")
    mean_a = a.mean(axis=0)
    mean_b = b.mean(axis=0)
    xa = a - mean_a
    xb = b - mean_b
    saa = xa.T @ xa / (n - 1) + ridge * np.eye(a.shape[1])
    sbb = xb.T @ xb / (n - 1) + ridge * np.eye(b.shape[1])
    sab = xa.T @ xb / (n - 1)
    isa = _inv_sqrt(saa)
    isb = _inv_sqrt(sbb)
    p, sing, qt = np.linalg.svd(isa @ sab @ isb)
    r = min(r, sing.size)
    return CcaModel(
        u=isa @ p[:, :r],
        v=isb @ qt[:r].T,
        mean_a=mean_a,
        mean_b=mean_b,
        rho=np.clip(sing[:r], 0.0, 1.0),
    )


def fit_cca_records(records: list[ArticleRecord], r: int, ridge: float = 1e-3) -> CcaModel:
    positives = [rec for rec in records if rec.label == Label.REAL]
    if not positives:
        raise SchemaError("CCA fitting requires positive (real) records")
    a, b = collect_views(positives)
    return fit_cca(a, b, r, ridge)


def cca_score(model: CcaModel, record: ArticleRecord) -> float:
    """Mean over pairs of the correlation-weighted product of whitened
    projections."""
    a, bs = build_views(record)
    ua = (np.asarray(a, dtype=np.float64) - model.mean_a) @ model.u
    total = 0.0
    for b in bs:
        vb = (np.asarray(b, dtype=np.float64) - model.mean_b) @ model.v
        total += float((model.rho * ua * vb).sum())
    return total / len(bs)


def calibrate_threshold(
    model: CcaModel, records: list[ArticleRecord]
) -> tuple[float, float]:
    """Pick tau maximizing accuracy of `score >= tau -> real` on a labeled
    split; ties resolve to the midpoint of the optimal threshold interval.

    Returns (tau, accuracy at tau).
    """
    labels = np.array([int(r.label == Label.REAL) for r in records])
    if labels.min() == labels.max():
        raise SchemaError("threshold calibration needs both classes present")
    scores = np.array([cca_score(model, r) for r in records])
    uniq = np.unique(scores)
    # Candidate i puts the threshold at uniq[i]; the final sentinel
    # predicts nothing as real.
    candidates = np.append(uniq, uniq[-1] + 1.0)
    accs = np.array(
        [((scores >= t) == (labels == 1)).mean() for t in candidates]
    )
    best = accs.max()
    idx = np.flatnonzero(accs == best)
    # Maximal contiguous run of best candidates -> one threshold interval.
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    run = max(runs, key=len)
    lo = uniq[run[0] - 1] if run[0] > 0 else uniq[0] - 1.0
    hi = candidates[run[-1]]
    tau = float((lo + hi) / 2.0)
    acc = float(((scores >= tau) == (labels == 1)).mean())
    return tau, acc
