"""Divergence estimates and numerical verification utilities."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .densities import composite_simpson
from .errors import UnboundedDivergenceWarning, ZeroWeights


@dataclass(frozen=True)
class KLEstimate:
    """Estimated divergence of the proposal from the target.

    standard_error is the Monte Carlo standard error in monte-carlo mode;
    in quadrature mode it is the change observed when the grid resolution
    is halved, a practical error indicator.
    """

    value: float
    standard_error: float
    method: str


def kl_divergence(
    target,
    proposal,
    theta,
    method: str = "quadrature",
    resolution: Optional[int] = None,
    bounds=(-30.0, 30.0),
    rng=None,
) -> KLEstimate:
    """Divergence integral pi(x) log(pi(x)/f(x|theta)) dx.

    Quadrature mode integrates on `bounds` clipped to the target support
    with `resolution` Simpson panels (default 100000). Monte Carlo mode
    averages the log ratio over `resolution` draws from the target's
    oracle sampler (default 100000) and needs `rng`. When the proposal
    tails look lighter than the target's at the grid edge, an
    UnboundedDivergenceWarning is issued since the true integral may not
    exist beyond the grid.
    """
    if method == "quadrature":
        res = 100000 if resolution is None else int(resolution)
        lo = max(target.support[0], bounds[0])
        hi = min(target.support[1], bounds[1])

        def integrand(x):
            lp = np.asarray(target.log_density(x), dtype=float)
            lf = np.asarray(proposal.log_density(x, theta), dtype=float)
            p = np.exp(lp)
            with np.errstate(invalid="ignore"):
                out = p * (lp - lf)
            out[p == 0.0] = 0.0
            return out

        _warn_on_light_tails(target, proposal, theta, lo, hi)
        value = composite_simpson(integrand, lo, hi, res)
        coarse = composite_simpson(integrand, lo, hi, max(1, res // 2))
        return KLEstimate(value, abs(value - coarse), "quadrature")

    if method == "monte-carlo":
        if target.oracle_sampler is None:
            raise ValueError(f"target {target.name} has no oracle sampler for Monte Carlo mode")
        if rng is None:
            raise ValueError("monte-carlo mode needs an rng")
        res = 100000 if resolution is None else int(resolution)
        x = target.oracle_sampler(res, rng)
        vals = np.asarray(target.log_density(x), dtype=float) - np.asarray(
            proposal.log_density(x, theta), dtype=float
        )
        return KLEstimate(
            float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(res)), "monte-carlo"
        )

    raise ValueError(f"unknown method {method!r}")


def _warn_on_light_tails(target, proposal, theta, lo, hi):
    # an integrand that has not decayed by a clipped grid edge leaves
    # unaccounted tail mass; with lighter proposal tails the full integral
    # may not even exist
    def term(x):
        lp = float(target.log_density(x))
        if lp == -math.inf:
            return 0.0
        return math.exp(lp) * (lp - float(proposal.log_density(x, theta)))

    edges = []
    if target.support[1] > hi:
        edges.append(hi)
    if target.support[0] < lo:
        edges.append(lo)
    for outer in edges:
        t_out = term(outer)
        if t_out > 1e-9 and t_out > 0.5 * term(outer * 0.97):
            warnings.warn(
                f"divergence integrand still {t_out:.3g} at grid edge x={outer:g}; "
                "proposal tails may be too light for the integral to exist",
                UnboundedDivergenceWarning,
                stacklevel=3,
            )
            return


class FDCheck(NamedTuple):
    analytic: float
    numeric: float
    rel_error: float


def fd_check(f: Callable, derivative: Callable, point: float, step: float = 1e-6) -> FDCheck:
    """Compare an analytic derivative with a central finite difference.

    The relative error is measured against the analytic value, with an
    absolute fallback near zero.
    """
    if not (0.0 < step <= 1e-2):
        raise ValueError(f"step must lie in (0, 1e-2], got {step}")
    p = float(point)
    numeric = (float(f(p + step)) - float(f(p - step))) / (2.0 * step)
    analytic = float(derivative(p))
    rel = abs(analytic - numeric) / max(abs(analytic), 1e-8)
    return FDCheck(analytic, numeric, rel)


@dataclass(frozen=True)
class MinorizationReport:
    """Outcome of a surrogate tangency/domination check."""

    passed: bool
    tangency_gap: float
    worst_violation: float
    worst_point: Optional[float]


def minorization_check(minorizer, objective: Callable, grid, tol: float = 1e-10) -> MinorizationReport:
    """Verify the surrogate touches the objective at its anchor and never
    rises above it on the grid.

    A positive violation means the surrogate exceeded the objective;
    values within tol pass.
    """
    gap = abs(float(minorizer.value(minorizer.anchor)) - float(objective(minorizer.anchor)))
    worst = -math.inf
    worst_at = None
    for u in np.asarray(grid, dtype=float):
        violation = float(minorizer.value(u)) - float(objective(u))
        if violation > worst:
            worst, worst_at = violation, float(u)
    return MinorizationReport(gap <= tol and worst <= tol, gap, worst, worst_at)


def effective_sample_size(batch) -> float:
    """(sum w)^2 / sum w^2: the equivalent count of unweighted samples.

    Accepts a weighted batch or a bare sequence of weights. Lies between
    1 and the batch size, reaching the top only under equal weights.
    """
    ws = [float(getattr(s, "w", s)) for s in batch]
    if not ws:
        raise ValueError("batch must be nonempty")
    sw = math.fsum(ws)
    if sw <= 0.0:
        raise ZeroWeights("effective sample size needs a positive total weight")
    return sw * sw / math.fsum(w * w for w in ws)
