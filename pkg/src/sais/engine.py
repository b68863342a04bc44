"""Stochastic-approximation driver: gain schedules, projected updates, traces.

The update is theta_{t+1} = theta_t + gamma_t (M(theta_t) - theta_t),
projected onto a coordinatewise box, with the integral estimate advanced
by the same gain from the same batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .densities import ParameterBox, draw_batch
from .errors import IterationDiverged, NonfiniteParameter

__all__ = [
    "GainSchedule",
    "gain",
    "ParameterBox",
    "sa_step",
    "AdaptationTrace",
    "adapt",
    "ascent_check",
]


@dataclass(frozen=True)
class GainSchedule:
    """Decreasing gain sequence gamma_t = c / (t + t0 + 1), t = 0, 1, ...

    The 1/t form makes the gains square-summable but not summable. t0
    delays the large early steps; c scales the whole sequence.
    """

    c: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"c must be a positive finite number, got {self.c}")
        if not (self.t0 >= 0 and math.isfinite(self.t0)):
            raise ValueError(f"t0 must be a nonnegative finite number, got {self.t0}")

    def gain(self, t) -> float:
        if t < 0:
            raise ValueError("iteration index must be >= 0")
        return self.c / (t + self.t0 + 1.0)

    def effective_gain(self, t) -> float:
        """The gain actually applied: the raw gain capped at 1."""
        return min(1.0, self.gain(t))


def gain(schedule: GainSchedule, t) -> float:
    """Value of the gain sequence at iteration t."""
    return schedule.gain(t)


def sa_step(theta, m_tilde, gamma: float, box: ParameterBox) -> np.ndarray:
    """One relaxation step theta + gamma (m_tilde - theta), projected onto box."""
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    m = np.asarray(m_tilde, dtype=float)
    if not np.all(np.isfinite(m)):
        raise NonfiniteParameter(f"update target {m_tilde!r} contains a nonfinite entry")
    th = np.asarray(theta, dtype=float)
    return box.project(th + gamma * (m - th))


@dataclass
class AdaptationTrace:
    """Iteration history of one run.

    Arrays have T+1 rows. Row t < T describes iteration t: theta[t] is the
    parameter the batch was drawn from, mean_w[t] the batch mean weight,
    gamma[t] the gain actually applied. v[t] is the integral estimate
    built from the first t batches, so v[0] is nan and v[T] is the final
    estimate. The last row carries only the final state: theta[T] and
    v[T], with mean_w[T] = gamma[T] = nan. When diagnostics were recorded,
    ess[t] is the effective sample size of batch t and kl[t] the
    divergence of the proposal at theta[t] from the target.
    """

    seed: object
    theta: np.ndarray
    v: np.ndarray
    mean_w: np.ndarray
    gamma: np.ndarray
    ess: Optional[np.ndarray] = None
    kl: Optional[np.ndarray] = None

    @property
    def iterations(self) -> int:
        return len(self.v) - 1

    @property
    def dim(self) -> int:
        return self.theta.shape[1]

    @property
    def theta_final(self) -> np.ndarray:
        return self.theta[-1]

    @property
    def v_final(self) -> float:
        return float(self.v[-1])


def adapt(
    target,
    proposal,
    adapter,
    schedule: GainSchedule,
    box: ParameterBox,
    iterations: int,
    batch_size: int,
    rng,
    theta0=None,
    diagnostics: bool = False,
    seed_label=None,
) -> AdaptationTrace:
    """Run the full adaptation loop and record its trace.

    Each iteration draws a weighted batch from the current proposal,
    advances the integral estimate, maps the batch to a parameter
    candidate, and relaxes toward it with the scheduled gain. theta0
    defaults to the proposal family's conventional start. The integral
    estimate is seeded with the first batch mean, which makes it the plain
    running mean of batch means under the default schedule.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    theta = np.asarray(proposal.theta0 if theta0 is None else theta0, dtype=float)
    theta = np.atleast_1d(theta).copy()
    if not box.contains(theta):
        raise ValueError(f"starting parameter {theta} lies outside the box")
    if diagnostics:
        from .diagnostics import effective_sample_size, kl_divergence

    T, N, D = int(iterations), int(batch_size), theta.shape[0]
    thetas = np.empty((T + 1, D))
    vs = np.full(T + 1, math.nan)
    mws = np.full(T + 1, math.nan)
    gams = np.full(T + 1, math.nan)
    ess_col = np.full(T + 1, math.nan) if diagnostics else None
    kl_col = np.full(T + 1, math.nan) if diagnostics else None

    v = math.nan
    for t in range(T):
        thetas[t] = theta
        g = schedule.effective_gain(t)
        batch = draw_batch(proposal, theta, target, N, rng)
        mw = math.fsum(s.w for s in batch) / N
        # the first batch seeds the estimate; a unit gain replaces it outright
        v = mw if (t == 0 or g == 1.0) else v + g * (mw - v)
        m_tilde = adapter.apply(theta, batch)
        theta = sa_step(theta, m_tilde, g, box)
        if not np.all(np.isfinite(theta)):
            raise IterationDiverged(f"parameter became nonfinite at iteration {t}")
        mws[t] = mw
        gams[t] = g
        vs[t + 1] = v
        if diagnostics:
            ess_col[t] = effective_sample_size(batch)
            kl_col[t] = kl_divergence(target, proposal, thetas[t], resolution=2000).value
    thetas[T] = theta
    if diagnostics:
        kl_col[T] = kl_divergence(target, proposal, theta, resolution=2000).value
    return AdaptationTrace(
        seed=seed_label,
        theta=thetas,
        v=vs,
        mean_w=mws,
        gamma=gams,
        ess=ess_col,
        kl=kl_col,
    )


def ascent_check(target, proposal, adapter, theta_grid, n_mc: int, rng) -> list:
    """Estimate <gradient, update direction> at each grid parameter.

    The gradient is the importance-weighted mean score of the proposal
    (the derivative of the fitted weighted log likelihood in its
    infinite-sample limit); the direction is the batch map output minus
    theta, both estimated from one batch of n_mc draws. For the built-in
    families the inner product is nonnegative up to Monte Carlo error and
    vanishes at the divergence-optimal parameter, so the mean update moves
    uphill on the fitted objective.
    """
    if n_mc < 2:
        raise ValueError("n_mc must be >= 2")
    out = []
    for theta in theta_grid:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        batch = draw_batch(proposal, th, target, n_mc, rng)
        xs = np.fromiter((s.x for s in batch), dtype=float, count=n_mc)
        ws = np.fromiter((s.w for s in batch), dtype=float, count=n_mc)
        sc = np.asarray(proposal.score(xs, th), dtype=float)
        grad = (sc * ws).mean(axis=-1)
        direction = np.asarray(adapter.apply(th, batch), dtype=float) - th
        out.append((th, float(grad @ direction)))
    return out
