"""Batch-to-parameter update maps.

Each map M consumes the current parameter and one weighted batch and
proposes the next parameter; the engine then relaxes toward that proposal
with the scheduled gain. Three concrete rules are provided: the weighted
sample mean for mean-parameterized families, a minorize-maximize step for
the Cauchy squared scale, and responsibility or indicator frequency
updates for mixture weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .densities import (
    DEFAULT_SCALE_SQ_BOUNDS,
    DEFAULT_WEIGHT_BOUNDS,
    mixture_full_weights,
)
from .errors import (
    MissingComponentIndex,
    NonnegativeCurvature,
    NonpositiveScale,
    ZeroWeights,
)

_VECTOR_CUTOFF = 64


def _scalar_param(theta) -> float:
    if isinstance(theta, (float, int)):
        return float(theta)
    return float(theta[0])


def _arrays(batch):
    n = len(batch)
    xs = np.fromiter((s.x for s in batch), dtype=float, count=n)
    ws = np.fromiter((s.w for s in batch), dtype=float, count=n)
    return xs, ws


@dataclass(frozen=True)
class AdaptationMap:
    """A named update map together with the family it is valid for."""

    name: str
    family_tag: str
    apply_fn: Callable
    min_batch: int = 1

    def apply(self, theta, batch) -> np.ndarray:
        if len(batch) < self.min_batch:
            raise ValueError(
                f"{self.name} needs a batch of at least {self.min_batch}, got {len(batch)}"
            )
        return self.apply_fn(theta, batch)


def exp_family_map(theta, batch) -> np.ndarray:
    """Weighted sample mean (1/N) sum w_i x_i.

    For a family in mean parameterization this estimates the target mean,
    which is the divergence-optimal parameter; theta itself is unused but
    kept for the uniform map interface.
    """
    n = len(batch)
    if n == 0:
        raise ValueError("batch must be nonempty")
    if n > _VECTOR_CUTOFF:
        xs, ws = _arrays(batch)
        return np.array([float(ws @ xs) / n])
    return np.array([math.fsum(s.w * s.x for s in batch) / n])


def cauchy_loglik(sigma_sq, batch) -> float:
    """Weighted log likelihood a(u) = sum w_i log f(x_i | u) in u = sigma^2."""
    u = _scalar_param(sigma_sq)
    if u <= 0:
        raise NonpositiveScale(f"sigma_sq={u!r}")
    half_log_u = 0.5 * math.log(u) - math.log(math.pi)
    return math.fsum(s.w * (half_log_u - math.log(u + s.x * s.x)) for s in batch)


def cauchy_score(sigma_sq, batch) -> float:
    """Derivative a'(u) = sum w_i [1/(2u) - 1/(u + x_i^2)]."""
    u = _scalar_param(sigma_sq)
    if u <= 0:
        raise NonpositiveScale(f"sigma_sq={u!r}")
    half_inv = 0.5 / u
    return math.fsum(s.w * (half_inv - 1.0 / (u + s.x * s.x)) for s in batch)


def cauchy_curvature_bound(sigma_sq, batch):
    """Second derivative a''(u) and its batch lower bound -(sum w)/(2u^2).

    Returned as (value, bound). The value is assembled as bound plus the
    nonnegative deficit sum w_i/(u + x_i^2)^2, so value >= bound holds
    exactly in floating point.
    """
    u = _scalar_param(sigma_sq)
    if u <= 0:
        raise NonpositiveScale(f"sigma_sq={u!r}")
    sw = math.fsum(s.w for s in batch)
    bound = -0.5 * sw / (u * u)
    deficit = math.fsum(s.w / ((u + s.x * s.x) ** 2) for s in batch)
    return bound + deficit, bound


def cauchy_mm_map(
    sigma_sq, batch, C: float, floor: float = DEFAULT_SCALE_SQ_BOUNDS[0]
) -> float:
    """Maximizer u - a'(u)/C of the quadratic surrogate, clamped to floor.

    C must be strictly negative; it is the curvature of the surrogate and
    any lower bound on a'' over the admissible interval is a valid choice.
    """
    u = _scalar_param(sigma_sq)
    if u <= 0:
        raise NonpositiveScale(f"sigma_sq={u!r}")
    if not C < 0:
        raise NonnegativeCurvature(f"surrogate curvature must be negative, got {C}")
    return max(float(floor), u - cauchy_score(u, batch) / C)


@dataclass(frozen=True)
class Minorizer:
    """Quadratic surrogate Q(.|anchor) for the weighted log likelihood.

    Q touches the objective at the anchor and, when its curvature bounds
    the objective's second derivative from below across the admissible
    interval, stays below it everywhere.
    """

    anchor: float
    value: Callable
    maximizer: Callable


def cauchy_minorizer(
    sigma_sq,
    batch,
    C: Optional[float] = None,
    floor: float = DEFAULT_SCALE_SQ_BOUNDS[0],
) -> Minorizer:
    """Build the quadratic surrogate for the Cauchy weighted log likelihood.

    With the default C, the curvature is -(sum w)/(2 floor^2), the
    tightest constant valid over the whole interval [floor, inf), so the
    surrogate genuinely minorizes. A custom C is used verbatim; note that
    e.g. the curvature at the current scale dominates only above the
    anchor.
    """
    u0 = _scalar_param(sigma_sq)
    a0 = cauchy_loglik(u0, batch)
    a1 = cauchy_score(u0, batch)
    if C is None:
        sw = math.fsum(s.w for s in batch)
        if sw <= 0.0:
            raise ZeroWeights("batch has zero total weight, surrogate curvature undefined")
        C = -0.5 * sw / (floor * floor)
    C = float(C)
    if not C < 0:
        raise NonnegativeCurvature(f"surrogate curvature must be negative, got {C}")

    def value(u):
        d = u - u0
        return a0 + a1 * d + 0.5 * C * d * d

    def maximizer():
        return max(float(floor), u0 - a1 / C)

    return Minorizer(anchor=u0, value=value, maximizer=maximizer)


def _clamp_weights(values, n):
    lo, hi = DEFAULT_WEIGHT_BOUNDS
    return np.array([min(hi, max(lo, v / n)) for v in values])


def mixture_rb_map(alpha, batch, component_log_densities) -> np.ndarray:
    """Responsibility-weighted update of the free mixture weights.

    Output coordinate d is (1/N) sum_i w_i r_id, where r_id is the
    posterior probability that draw i came from component d under the
    current weights. Clamped coordinatewise into the admissible weight
    interval.
    """
    lds = tuple(component_log_densities)
    n_comp = len(lds)
    w_full = mixture_full_weights(alpha, n_comp)
    n = len(batch)
    if n == 0:
        raise ValueError("batch must be nonempty")

    if n > _VECTOR_CUTOFF:
        xs, ws = _arrays(batch)
        lps = np.stack([np.asarray(ld(xs), dtype=float) for ld in lds])
        lps += np.log(np.asarray(w_full))[:, None]
        m = lps.max(axis=0)
        ok = ~np.isneginf(m)
        es = np.exp(lps[:, ok] - m[ok])
        r = es / es.sum(axis=0)
        acc = (r[:-1] * ws[ok]).sum(axis=1)
        return _clamp_weights(acc, n)

    log_w = [math.log(a) for a in w_full]
    acc = [0.0] * (n_comp - 1)
    for s in batch:
        ls = [log_w[d] + lds[d](s.x) for d in range(n_comp)]
        m = max(ls)
        if m == -math.inf:
            continue
        es = [math.exp(l - m) for l in ls]
        tot = math.fsum(es)
        for d in range(n_comp - 1):
            acc[d] += s.w * es[d] / tot
    return _clamp_weights(acc, n)


def mixture_indicator_map(alpha, batch) -> np.ndarray:
    """Weighted component-frequency update of the free mixture weights.

    Coordinate d collects (1/N) sum of w_i over draws recorded against
    component d+1. Every sample must carry its component index.
    """
    if isinstance(alpha, (float, int)):
        n_comp = 2
    else:
        n_comp = len(alpha) + 1
    mixture_full_weights(alpha, n_comp)  # validate current weights
    n = len(batch)
    if n == 0:
        raise ValueError("batch must be nonempty")
    acc = [0.0] * (n_comp - 1)
    for s in batch:
        if s.component_index is None:
            raise MissingComponentIndex(
                "indicator update needs draws labeled with their mixture component"
            )
        d = s.component_index - 1
        if d < n_comp - 1:
            acc[d] += s.w
    return _clamp_weights(acc, n)


def exp_family_adapter() -> AdaptationMap:
    """Relax toward the weighted sample mean (mean-parameterized families)."""
    return AdaptationMap("exp-family", "normal-mean", exp_family_map)


def cauchy_mm_adapter(
    curvature="floor", floor: float = DEFAULT_SCALE_SQ_BOUNDS[0]
) -> AdaptationMap:
    """Minorize-maximize update for the Cauchy squared scale.

    curvature selects the surrogate's curvature constant:

    * "floor": -(sum w)/(2 floor^2), valid across the whole admissible
      interval. Safe but extremely conservative when the scale sits far
      above the floor.
    * "current": -(sum w)/(2 u^2) evaluated at the current scale, a
      Newton-type step whose size is independent of the batch size.
    * "absorbed": the map returns u + a'(u) unscaled, leaving the
      curvature constant to the gain sequence.
    * any negative float: used verbatim.

    A batch with zero total weight carries no information about the scale
    and maps to the current parameter unchanged. Batches must hold at
    least two draws: fitting a Cauchy scale to a single draw lets it
    collapse toward zero.
    """
    if not (curvature in ("floor", "current", "absorbed") or float(curvature) < 0):
        raise ValueError(f"curvature must be 'floor', 'current', 'absorbed', or negative, got {curvature!r}")
    if floor <= 0:
        raise NonpositiveScale("floor must be positive")

    def apply(theta, batch):
        u = _scalar_param(theta)
        if u <= 0:
            raise NonpositiveScale(f"sigma_sq={u!r}")
        sw = math.fsum(s.w for s in batch)
        if sw <= 0.0:
            return np.array([u])
        if curvature == "absorbed":
            return np.array([max(floor, u + cauchy_score(u, batch))])
        if curvature == "floor":
            C = -0.5 * sw / (floor * floor)
        elif curvature == "current":
            C = -0.5 * sw / (u * u)
        else:
            C = float(curvature)
        return np.array([cauchy_mm_map(u, batch, C, floor)])

    return AdaptationMap("cauchy-mm", "cauchy-scale", apply, min_batch=2)


def mixture_rb_adapter(family) -> AdaptationMap:
    """Responsibility update bound to a mixture family's fixed components.

    Accepts a ProposalFamily with component_log_densities or a bare
    sequence of component log densities.
    """
    lds = getattr(family, "component_log_densities", None)
    if lds is None:
        lds = tuple(family)
    if not lds or len(lds) < 2:
        raise ValueError("responsibility update needs at least two fixed components")
    tag = getattr(family, "name", "mixture")
    return AdaptationMap("mixture-rb", tag, lambda th, b: mixture_rb_map(th, b, lds))


def mixture_indicator_adapter() -> AdaptationMap:
    """Component-frequency update; draws must carry component indices."""
    return AdaptationMap("mixture-indicator", "mixture", mixture_indicator_map)


def frozen_adapter() -> AdaptationMap:
    """Map that returns theta unchanged, freezing the proposal.

    Running the driver with this map yields the fixed-proposal estimator
    with the identical integral recursion and sample budget.
    """
    return AdaptationMap("frozen", "any", lambda th, b: np.asarray(th, dtype=float))
