"""Finite-difference verification of the analytic gradients.

Central differences with a fixed step compare every gradient component
against the analytic value; the harness reports the worst guarded relative
error. Map-occupancy inputs are nudged apart wherever a current/history pair
would sit inside the finite-difference step of the |.| kink.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contrastive import AnchorSamples, contrastive_loss, contrastive_loss_grad
from .temporal import AlignedGrid, mo_loss, mo_loss_grad
from .types import GridMap, GridSpec

FD_STEP = 1e-5
_REL_FLOOR = 1e-6   # guards the relative error against vanishing gradients
_TIE_MARGIN = 1e-3  # minimum |current - aligned| gap, keeps FD off the kink


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), _REL_FLOOR)


@dataclass
class GradCheckResult:
    max_rel_error: float
    n_components: int

    def passed(self, tol: float = 1e-4) -> bool:
        return self.max_rel_error <= tol


def _random_groups(rng: np.random.Generator, dim: int) -> list[AnchorSamples]:
    groups = []
    for _ in range(int(rng.integers(2, 5))):
        has_positive = rng.random() > 0.2
        n_neg = int(rng.integers(0, 4))
        groups.append(
            AnchorSamples(
                anchor=rng.normal(0.0, 0.5, dim),
                positive=rng.normal(0.0, 0.5, dim) if has_positive else None,
                negatives=rng.normal(0.0, 0.5, (n_neg, dim)),
            )
        )
    return groups


def _rebuild(groups, gi: int, slot: str, row: int, comp: int, delta: float) -> list[AnchorSamples]:
    out = []
    for i, g in enumerate(groups):
        anchor = g.anchor.copy()
        positive = None if g.positive is None else g.positive.copy()
        negatives = g.negatives.copy()
        if i == gi:
            if slot == "anchor":
                anchor[comp] += delta
            elif slot == "positive":
                positive[comp] += delta
            else:
                negatives[row, comp] += delta
        out.append(AnchorSamples(anchor, positive, negatives))
    return out


def contrastive_grad_check(
    seed: int = 0,
    n_cases: int = 50,
    dim: int = 8,
    step: float = FD_STEP,
    corrupt: float = 0.0,
) -> GradCheckResult:
    """Compare analytic contrastive gradients against central differences.

    ``corrupt`` adds a constant to every analytic component; nonzero values
    are for negative-control runs that must fail.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    n_comp = 0
    for _ in range(n_cases):
        groups = _random_groups(rng, dim)
        _, grads = contrastive_loss_grad(groups)

        def fd(gi, slot, row, comp):
            plus = contrastive_loss(_rebuild(groups, gi, slot, row, comp, step))
            minus = contrastive_loss(_rebuild(groups, gi, slot, row, comp, -step))
            return (plus - minus) / (2.0 * step)

        for gi, (g, grad) in enumerate(zip(groups, grads)):
            slots = [("anchor", 0, g.anchor, grad["anchor"])]
            if g.positive is not None:
                slots.append(("positive", 0, g.positive, grad["positive"]))
            for row in range(len(g.negatives)):
                slots.append(("negatives", row, g.negatives[row], grad["negatives"][row]))
            for slot, row, vec, gvec in slots:
                for comp in range(len(vec)):
                    analytic = float(gvec[comp]) + corrupt
                    numeric = fd(gi, slot, row, comp)
                    worst = max(worst, relative_error(analytic, numeric))
                    n_comp += 1
    return GradCheckResult(worst, n_comp)


def _random_mo_case(rng: np.random.Generator, shape: tuple[int, int]):
    h, w = shape
    spec = GridSpec(width=w, height=h, resolution=0.5, x_min=0.0, y_min=0.0)
    # stay a safe distance inside [0, 1] so FD perturbations remain valid grids
    current = 0.01 + 0.98 * rng.random((h, w))
    history = []
    for _ in range(int(rng.integers(1, 4))):
        values = 0.01 + 0.98 * rng.random((h, w))
        # keep every pair clear of the |x| kink so central differences are exact
        gap = current - values
        too_close = np.abs(gap) < _TIE_MARGIN
        values[too_close] = np.where(
            current[too_close] <= 0.5,
            current[too_close] + _TIE_MARGIN,
            current[too_close] - _TIE_MARGIN,
        )
        valid = rng.random((h, w)) > 0.1
        history.append(AlignedGrid(values, valid))
    return GridMap(spec, current), history, spec


def mo_grad_check(
    seed: int = 0,
    n_cases: int = 20,
    shape: tuple[int, int] = (10, 12),
    step: float = FD_STEP,
    corrupt: float = 0.0,
) -> GradCheckResult:
    """Compare the map-occupancy subgradient against central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    n_comp = 0
    for _ in range(n_cases):
        current, history, spec = _random_mo_case(rng, shape)
        grad = mo_loss_grad(current, history) + corrupt
        base = current.values
        for r in range(shape[0]):
            for c in range(shape[1]):
                plus = base.copy()
                plus[r, c] += step
                minus = base.copy()
                minus[r, c] -= step
                numeric = (
                    mo_loss(GridMap(spec, plus), history)
                    - mo_loss(GridMap(spec, minus), history)
                ) / (2.0 * step)
                worst = max(worst, relative_error(float(grad[r, c]), numeric))
                n_comp += 1
    return GradCheckResult(worst, n_comp)
