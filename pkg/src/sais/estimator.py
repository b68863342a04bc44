"""Recursive integral estimation and the replication/MSE harness.

The estimate of integral h(x) pi(x) dx is advanced once per batch by
v <- v + gamma (mean_i h(x_i) w_i - v), seeded with the first batch mean.
Under the default gain schedule this is exactly the running mean of batch
means, i.e. the ordinary importance sampling estimator; adaptation only
changes where later batches are drawn from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .adapters import frozen_adapter
from .densities import ParameterBox, ProposalFamily, TargetDensity
from .engine import GainSchedule, adapt
from .errors import IterationDiverged, SamplerError


def integral_update(v: float, batch, gamma: float, integrand: Optional[Callable] = None) -> float:
    """Advance the integral estimate with one weighted batch.

    Returns v + gamma (m - v) where m is the batch mean of h(x_i) w_i and
    h defaults to the constant 1. gamma = 1 replaces v by m outright.
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    n = len(batch)
    if integrand is None:
        m = math.fsum(s.w for s in batch) / n
    else:
        m = math.fsum(integrand(s.x) * s.w for s in batch) / n
    if gamma == 1.0:
        return m
    return v + gamma * (m - v)


@dataclass(frozen=True)
class IntegralEstimate:
    """Recursive integral estimate after t batches."""

    v: float
    t: int = 0
    integrand: Optional[Callable] = None

    def __post_init__(self):
        if not math.isfinite(self.v):
            raise ValueError(f"estimate must be finite, got {self.v}")
        if self.t < 0:
            raise ValueError("iteration count must be nonnegative")

    @classmethod
    def from_first_batch(cls, batch, integrand: Optional[Callable] = None) -> "IntegralEstimate":
        return cls(integral_update(0.0, batch, 1.0, integrand), 1, integrand)

    def update(self, batch, gamma: float) -> "IntegralEstimate":
        return IntegralEstimate(
            integral_update(self.v, batch, gamma, self.integrand), self.t + 1, self.integrand
        )


def fixed_proposal_estimate(
    target: TargetDensity,
    proposal: ProposalFamily,
    theta_fixed,
    iterations: int,
    batch_size: int,
    rng,
    schedule: Optional[GainSchedule] = None,
) -> float:
    """Integral estimate from a proposal frozen at theta_fixed.

    Runs the identical recursion and sample budget as an adaptive run,
    just without parameter movement. With the default schedule the result
    is the plain mean of all T batch means.
    """
    trace = adapt(
        target,
        proposal,
        frozen_adapter(),
        schedule if schedule is not None else GainSchedule(),
        proposal.param_box,
        iterations,
        batch_size,
        rng,
        theta0=theta_fixed,
    )
    return trace.v_final


@dataclass(frozen=True)
class ArmSpec:
    """One estimator arm: adaptive when theta is None, else frozen at theta."""

    name: str
    theta: object = None


@dataclass(frozen=True)
class ReplicationPlan:
    """Resolved experiment setup consumed by replicate_mse."""

    example: str
    target: TargetDensity
    proposal: ProposalFamily
    adapter: object
    schedule: GainSchedule
    box: ParameterBox
    iterations: int
    batch_size: int
    theta0: object
    arms: Tuple[ArmSpec, ...]


@dataclass
class ArmResult:
    """Squared-error summary of one arm's final estimates against truth 1."""

    name: str
    mse: float
    se: float
    values: np.ndarray
    diverged: int = 0

    @property
    def mean(self) -> float:
        return float(np.nanmean(self.values))


@dataclass
class MSEReport:
    """Per-arm mean squared errors for one experiment."""

    example: str
    arms: list
    replications: int
    master_seed: int
    config_digest: str

    def arm(self, name: str) -> ArmResult:
        for a in self.arms:
            if a.name == name:
                return a
        raise KeyError(name)


def replicate_mse(plan: ReplicationPlan, replications: int, master_seed: int = 0) -> MSEReport:
    """Replicate every arm independently and summarize squared errors.

    Replication r of arm a draws from a fresh generator seeded with
    (master_seed, a, r), so no two runs share a stream and any single
    replication is reproducible in isolation. A replication that raises a
    sampler error counts as diverged and is excluded; an arm aborts once
    more than 1% of its replications diverge. The reported se is the
    Monte Carlo standard error of the MSE itself.
    """
    R = int(replications)
    if R < 2:
        raise ValueError("replications must be >= 2")
    results = []
    for arm_index, arm in enumerate(plan.arms):
        frozen = arm.theta is not None
        adapter = frozen_adapter() if frozen else plan.adapter
        theta0 = np.asarray(arm.theta if frozen else plan.theta0, dtype=float)
        values = np.full(R, math.nan)
        diverged = 0
        for r in range(R):
            rng = np.random.default_rng([master_seed, arm_index, r])
            try:
                trace = adapt(
                    plan.target,
                    plan.proposal,
                    adapter,
                    plan.schedule,
                    plan.box,
                    plan.iterations,
                    plan.batch_size,
                    rng,
                    theta0=theta0,
                )
            except SamplerError:
                diverged += 1
                continue
            values[r] = trace.v_final
        if diverged > 0.01 * R:
            raise IterationDiverged(
                f"{plan.example}/{arm.name}: {diverged} of {R} replications diverged"
            )
        sq = (values[np.isfinite(values)] - 1.0) ** 2
        mse = float(sq.mean())
        se = float(sq.std(ddof=1) / math.sqrt(len(sq)))
        results.append(ArmResult(arm.name, mse, se, values, diverged))
    digest = (
        f"{plan.example};T={plan.iterations};N={plan.batch_size};"
        f"c={plan.schedule.c:g};t0={plan.schedule.t0:g};R={R};seed={master_seed}"
    )
    return MSEReport(plan.example, results, R, master_seed, digest)
