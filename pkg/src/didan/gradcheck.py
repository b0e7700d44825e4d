"""Central-difference verification of analytic gradients.

The loss builder must be deterministic and operate in float64; the
analytic side goes through autodiff.backward, the numeric side through
coordinate-wise central differences, and the two never share code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autodiff as ad

LossBuilder = Callable[[dict[str, ad.Node]], ad.Node]


@dataclass
class GradCheckReport:
    max_rel_error: dict[str, float]
    tol: float

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.max_rel_error.items() if v > self.tol]

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)


def _rel_err(a: float, b: float, floor: float = 1e-8) -> float:
    # Differences below the FD noise floor count as agreement, so that
    # near-zero gradients do not blow up the relative measure.
    if abs(a - b) < floor:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def finite_difference_check(
    build_loss: LossBuilder,
    params: dict[str, np.ndarray],
    h: float = 1e-4,
    tol: float = 1e-3,
) -> GradCheckReport:
    """Compare analytic and central-difference gradients per parameter."""
    params64 = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    nodes = {k: ad.parameter(v.copy(), name=k) for k, v in params64.items()}
    loss = build_loss(nodes)
    grads = ad.backward(loss, wrt=nodes.values())
    analytic = {k: grads[id(n)] for k, n in nodes.items()}

    def eval_loss(values: dict[str, np.ndarray]) -> float:
        frozen = {k: ad.parameter(v.copy(), name=k) for k, v in values.items()}
        return float(build_loss(frozen).value[0])

    report: dict[str, float] = {}
    for name, base in params64.items():
        worst = 0.0
        flat = base.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            perturbed = {k: (v.copy() if k == name else v) for k, v in params64.items()}
            pf = perturbed[name].reshape(-1)
            pf[i] = orig + h
            up = eval_loss(perturbed)
            pf[i] = orig - h
            down = eval_loss(perturbed)
            numeric = (up - down) / (2.0 * h)
            worst = max(worst, _rel_err(float(analytic[name].reshape(-1)[i]), numeric))
        report[name] = worst
    return GradCheckReport(max_rel_error=report, tol=tol)
