"""Target densities, parametric proposal families, and importance weights.

Log densities are the primary representation; weights are formed in log
space and exponentiated so tail draws underflow to zero instead of
producing 0/0. All density callables broadcast over numpy arrays and stay
allocation-free for scalar inputs, which keeps the adaptation loop cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    InvalidMixtureWeights,
    NonfiniteWeight,
    NonpositiveScale,
    ProposalZeroAtSample,
)

LOG_PI = math.log(math.pi)
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# draw_batch switches from per-sample scalar arithmetic to vectorized
# numpy above this batch size
_VECTOR_CUTOFF = 32

DEFAULT_MEAN_BOUNDS = (-20.0, 20.0)
DEFAULT_SCALE_SQ_BOUNDS = (0.01, 100.0)
DEFAULT_WEIGHT_BOUNDS = (0.001, 0.999)


def composite_simpson(f: Callable, lo: float, hi: float, panels: int) -> float:
    """Integrate f over [lo, hi] with the composite Simpson rule.

    f must accept a numpy array. `panels` counts three-point panels, so
    2*panels + 1 evaluations are made.
    """
    if not hi > lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if panels < 1:
        raise ValueError("panels must be >= 1")
    n = 2 * int(panels)
    x = np.linspace(lo, hi, n + 1)
    y = np.asarray(f(x), dtype=float)
    h = (hi - lo) / n
    return float((y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-2:2].sum()) * h / 3.0)


def real_line_quadrature(f: Callable, panels: int = 20000) -> float:
    """Integrate f over the whole real line via the substitution x = tan(phi).

    Suited to densities with polynomial or faster tail decay; the
    transformed integrand stays bounded even for Cauchy tails.
    """
    eps = 1e-9

    def g(phi):
        x = np.tan(phi)
        return np.asarray(f(x), dtype=float) * (1.0 + x * x)

    return composite_simpson(g, -math.pi / 2 + eps, math.pi / 2 - eps, panels)


def _first(theta) -> float:
    # accept floats, lists, and length-1 arrays on the hot path
    if isinstance(theta, (float, int)):
        return float(theta)
    return float(theta[0])


def _logaddexp(a, b):
    if type(a) is float and type(b) is float:
        if a < b:
            a, b = b, a
        if b == -math.inf:
            return a
        return a + math.log1p(math.exp(b - a))
    return np.logaddexp(a, b)


@dataclass(frozen=True)
class WeightedSample:
    """One proposal draw with its importance weight.

    component_index is 1-based and present only when the generating
    proposal is a mixture.
    """

    x: float
    w: float
    component_index: Optional[int] = None


@dataclass(frozen=True)
class ParameterBox:
    """Coordinatewise closed box of admissible parameters."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-d and of equal length")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("box bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("each lower bound must lie strictly below its upper bound")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "ParameterBox":
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def project(self, theta) -> np.ndarray:
        """Clamp each coordinate into its interval (idempotent)."""
        return np.minimum(self.upper, np.maximum(self.lower, np.asarray(theta, dtype=float)))

    def contains(self, theta, atol: float = 0.0) -> bool:
        th = np.asarray(theta, dtype=float)
        return bool(np.all(th >= self.lower - atol) and np.all(th <= self.upper + atol))


class TargetDensity:
    """Normalized density over an interval of the real line.

    Parameters
    ----------
    log_density : callable
        Log density; must broadcast over numpy arrays.
    support : pair of floats
        Interval outside which the density is zero.
    oracle_sampler : callable, optional
        (n, rng) -> array of n exact draws. Used only by Monte Carlo
        diagnostics, never by the estimator.
    name : str
    check_normalization : bool
        Verify at construction that the density integrates to 1 within
        `normalization_tol` over `bounds` (clipped to the support). Keep
        enabled unless the target carries real mass outside `bounds`.
    """

    def __init__(
        self,
        log_density: Callable,
        support: Tuple[float, float] = (-math.inf, math.inf),
        oracle_sampler: Optional[Callable] = None,
        name: str = "target",
        check_normalization: bool = True,
        bounds: Tuple[float, float] = (-30.0, 30.0),
        panels: int = 20000,
        normalization_tol: float = 1e-6,
    ):
        if not support[0] < support[1]:
            raise ValueError("support must be a nonempty interval")
        self.log_density = log_density
        self.support = (float(support[0]), float(support[1]))
        self.oracle_sampler = oracle_sampler
        self.name = name
        if check_normalization:
            mass = self.quadrature_mass(bounds, panels)
            if abs(mass - 1.0) > normalization_tol:
                raise ValueError(
                    f"{name}: quadrature mass {mass:.8f} differs from 1 by more "
                    f"than {normalization_tol}; normalize the density first"
                )

    def density(self, x):
        lx = self.log_density(x)
        return np.exp(lx) if isinstance(lx, np.ndarray) else math.exp(lx)

    def quadrature_mass(self, bounds=(-30.0, 30.0), panels: int = 20000) -> float:
        lo = max(self.support[0], bounds[0])
        hi = min(self.support[1], bounds[1])
        return composite_simpson(lambda x: np.exp(self.log_density(x)), lo, hi, panels)

    def __repr__(self):
        return f"TargetDensity({self.name!r})"


@dataclass(frozen=True)
class ProposalFamily:
    """Parametric proposal family over the real line.

    log_density(x, theta) broadcasts over x. sampler(theta, n, rng)
    returns (draws, component_indices); the index array is None except
    for mixtures, where it is 1-based. score(x, theta) is the gradient of
    log_density in theta with shape (dim,) + shape(x). natural_param and
    log_partition carry exponential-family metadata for families in mean
    parameterization, None otherwise. theta0 is the conventional starting
    parameter and param_box the admissible region.
    """

    name: str
    dim: int
    log_density: Callable
    sampler: Callable
    param_box: ParameterBox
    theta0: np.ndarray
    score: Optional[Callable] = None
    natural_param: Optional[Callable] = None
    log_partition: Optional[Callable] = None
    component_log_densities: Optional[tuple] = None
    component_samplers: Optional[tuple] = None

    def density(self, x, theta):
        lx = self.log_density(x, theta)
        return np.exp(lx) if isinstance(lx, np.ndarray) else math.exp(lx)

    @property
    def n_components(self) -> Optional[int]:
        if self.component_log_densities is None:
            return None
        return len(self.component_log_densities)


def _frozen(values) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float)).copy()
    arr.flags.writeable = False
    return arr


def importance_weight(target: TargetDensity, proposal: ProposalFamily, theta, x) -> float:
    """Importance weight pi(x) / f(x | theta) for one draw."""
    lp = float(target.log_density(x))
    lf = float(proposal.log_density(x, theta))
    if lf == -math.inf:
        if lp == -math.inf:
            return 0.0
        raise ProposalZeroAtSample(
            f"proposal {proposal.name} has zero density at x={x!r} where the target is positive"
        )
    try:
        w = math.exp(lp - lf)
    except OverflowError:
        raise NonfiniteWeight(f"weight overflow at x={x!r} (log ratio {lp - lf:.3f})") from None
    if not math.isfinite(w):
        raise NonfiniteWeight(f"nonfinite weight at x={x!r}")
    return w


def draw_batch(proposal: ProposalFamily, theta, target: TargetDensity, n: int, rng) -> list:
    """Draw n samples from f(.|theta) and attach importance weights.

    Mixture proposals also record which component each draw came from.
    """
    if n < 1:
        raise ValueError("batch size must be >= 1")
    xs, comps = proposal.sampler(theta, n, rng)
    if n <= _VECTOR_CUTOFF:
        out = []
        for i in range(n):
            x = float(xs[i])
            w = importance_weight(target, proposal, theta, x)
            out.append(WeightedSample(x, w, None if comps is None else int(comps[i])))
        return out

    lp = np.asarray(target.log_density(xs), dtype=float)
    lf = np.asarray(proposal.log_density(xs, theta), dtype=float)
    zero_prop = np.isneginf(lf)
    bad = zero_prop & ~np.isneginf(lp)
    if bad.any():
        x_bad = float(xs[int(np.argmax(bad))])
        raise ProposalZeroAtSample(
            f"proposal {proposal.name} has zero density at x={x_bad!r} where the target is positive"
        )
    with np.errstate(over="ignore", invalid="ignore"):
        w = np.exp(lp - lf)
    w[zero_prop] = 0.0
    if not np.all(np.isfinite(w)):
        x_bad = float(xs[int(np.argmax(~np.isfinite(w)))])
        raise NonfiniteWeight(f"nonfinite weight at x={x_bad!r}")
    if comps is None:
        return [WeightedSample(float(xs[i]), float(w[i])) for i in range(n)]
    return [WeightedSample(float(xs[i]), float(w[i]), int(comps[i])) for i in range(n)]


def standard_normal_target() -> TargetDensity:
    """Standard normal target with an exact sampler for diagnostics."""

    def log_density(x):
        return -0.5 * (x * x) - HALF_LOG_2PI

    return TargetDensity(
        log_density,
        oracle_sampler=lambda n, rng: rng.standard_normal(n),
        name="std-normal",
    )


def normal_mixture_target(weights, means, sds=None) -> TargetDensity:
    """Finite normal mixture target; weights must sum to 1."""
    weights = [float(a) for a in weights]
    means = [float(m) for m in means]
    if sds is None:
        sds = [1.0] * len(means)
    sds = [float(s) for s in sds]
    if len(weights) != len(means) or len(weights) != len(sds):
        raise ValueError("weights, means, and sds must have equal length")
    if any(a <= 0 for a in weights) or abs(sum(weights) - 1.0) > 1e-12:
        raise InvalidMixtureWeights(f"target mixture weights {weights} do not form a simplex point")
    if any(s <= 0 for s in sds):
        raise NonpositiveScale("mixture component sd must be positive")
    lds = tuple(normal_log_density(m, s) for m, s in zip(means, sds))
    log_ws = [math.log(a) for a in weights]

    def log_density(x):
        acc = log_ws[0] + lds[0](x)
        for lw, ld in zip(log_ws[1:], lds[1:]):
            acc = _logaddexp(acc, lw + ld(x))
        return acc

    cum = np.cumsum(weights)
    cum[-1] = 1.0

    def oracle_sampler(n, rng):
        comp = np.searchsorted(cum, rng.random(n), side="right")
        comp = np.minimum(comp, len(weights) - 1)
        x = rng.standard_normal(n)
        return np.asarray(means)[comp] + np.asarray(sds)[comp] * x

    label = "+".join(f"{a:.4g}*N({m:g},{s:g}^2)" for a, m, s in zip(weights, means, sds))
    return TargetDensity(log_density, oracle_sampler=oracle_sampler, name=label)


def normal_log_density(mean: float, sd: float = 1.0) -> Callable:
    """Log density of N(mean, sd^2) as a broadcasting callable."""
    if sd <= 0:
        raise NonpositiveScale("sd must be positive")
    c = HALF_LOG_2PI + math.log(sd)
    inv2 = 0.5 / (sd * sd)

    def log_density(x):
        d = x - mean
        return -(d * d) * inv2 - c

    return log_density


def normal_sampler(mean: float, sd: float = 1.0) -> Callable:
    """(n, rng) -> array sampler for N(mean, sd^2)."""

    def draw(n, rng):
        if n == 1:
            return np.array([mean + sd * rng.standard_normal()])
        return mean + sd * rng.standard_normal(n)

    return draw


def normal_mean_family(variance: float = 1.0, initial_mean: float = 0.0) -> ProposalFamily:
    """Normal location family with fixed variance; theta = (mean,).

    This family is in mean parameterization, so natural_param and
    log_partition are populated.
    """
    if variance <= 0:
        raise NonpositiveScale("variance must be positive")
    sd = math.sqrt(variance)
    c = HALF_LOG_2PI + 0.5 * math.log(variance)
    inv2 = 0.5 / variance

    def log_density(x, theta):
        d = x - _first(theta)
        return -(d * d) * inv2 - c

    def sampler(theta, n, rng):
        mu = _first(theta)
        if n == 1:
            return np.array([mu + sd * rng.standard_normal()]), None
        return mu + sd * rng.standard_normal(n), None

    def score(x, theta):
        mu = _first(theta)
        g = (np.asarray(x, dtype=float) - mu) / variance
        return np.expand_dims(g, 0)

    return ProposalFamily(
        name="normal-mean",
        dim=1,
        log_density=log_density,
        sampler=sampler,
        param_box=ParameterBox([DEFAULT_MEAN_BOUNDS[0]], [DEFAULT_MEAN_BOUNDS[1]]),
        theta0=_frozen([initial_mean]),
        score=score,
        natural_param=lambda mu: np.atleast_1d(np.asarray(mu, dtype=float)) / variance,
        log_partition=lambda mu: float(np.asarray(mu, dtype=float).reshape(()) ** 2) / (2 * variance),
    )


def cauchy_scale_family(initial_scale_sq: float = 1.0) -> ProposalFamily:
    """Cauchy family centered at zero; theta = (sigma_sq,), the squared scale.

    Density sigma / (pi (sigma^2 + x^2)).
    """
    if initial_scale_sq <= 0:
        raise NonpositiveScale("initial_scale_sq must be positive")

    def log_density(x, theta):
        u = _first(theta)
        if u <= 0:
            raise NonpositiveScale(f"sigma_sq={u!r}")
        s = u + x * x
        # scalar fast path; np.log handles arrays
        return 0.5 * math.log(u) - LOG_PI - (math.log(s) if type(s) is float else np.log(s))

    def sampler(theta, n, rng):
        sd = math.sqrt(_first(theta))
        if n == 1:
            return np.array([sd * rng.standard_cauchy()]), None
        return sd * rng.standard_cauchy(n), None

    def score(x, theta):
        u = _first(theta)
        if u <= 0:
            raise NonpositiveScale(f"sigma_sq={u!r}")
        g = 0.5 / u - 1.0 / (u + np.asarray(x, dtype=float) ** 2)
        return np.expand_dims(g, 0)

    return ProposalFamily(
        name="cauchy-scale",
        dim=1,
        log_density=log_density,
        sampler=sampler,
        param_box=ParameterBox([DEFAULT_SCALE_SQ_BOUNDS[0]], [DEFAULT_SCALE_SQ_BOUNDS[1]]),
        theta0=_frozen([initial_scale_sq]),
        score=score,
    )


def mixture_full_weights(theta, n_components: int) -> list:
    """Reconstitute all n_components mixture weights from the free ones.

    theta holds the first n_components - 1 weights; the last is implied.
    Raises InvalidMixtureWeights unless every weight is strictly positive.
    """
    if isinstance(theta, (float, int)):
        free = [float(theta)]
    else:
        free = [float(a) for a in theta]
    if len(free) != n_components - 1:
        raise InvalidMixtureWeights(
            f"expected {n_components - 1} free weights, got {len(free)}"
        )
    last = 1.0 - math.fsum(free)
    if last <= 0.0 or any(a <= 0.0 for a in free):
        raise InvalidMixtureWeights(f"weights {free + [last]} leave the open simplex")
    free.append(last)
    return free


def fixed_component_mixture(
    component_log_densities: Sequence[Callable],
    component_samplers: Sequence[Callable],
    initial_weights=None,
    name: str = "mixture",
) -> ProposalFamily:
    """Mixture with fixed component densities and adaptable weights.

    theta is the vector of the first D-1 weights; the last weight is
    1 minus their sum. Draws record their 1-based component index.
    """
    lds = tuple(component_log_densities)
    samplers = tuple(component_samplers)
    if len(lds) < 2 or len(lds) != len(samplers):
        raise ValueError("need >= 2 components with matching samplers")
    n_comp = len(lds)
    if initial_weights is None:
        theta0 = [1.0 / n_comp] * (n_comp - 1)
    else:
        theta0 = [float(a) for a in initial_weights]
    mixture_full_weights(theta0, n_comp)  # validate

    def log_density(x, theta):
        w = mixture_full_weights(theta, n_comp)
        acc = math.log(w[0]) + lds[0](x)
        for d in range(1, n_comp):
            acc = _logaddexp(acc, math.log(w[d]) + lds[d](x))
        return acc

    def sampler(theta, n, rng):
        w = mixture_full_weights(theta, n_comp)
        if n == 1:
            u = rng.random()
            acc = 0.0
            pick = n_comp - 1
            for d in range(n_comp):
                acc += w[d]
                if u < acc:
                    pick = d
                    break
            return samplers[pick](1, rng), np.array([pick + 1])
        cum = np.cumsum(w)
        cum[-1] = 1.0
        comp = np.searchsorted(cum, rng.random(n), side="right")
        comp = np.minimum(comp, n_comp - 1)
        xs = np.empty(n)
        for d in range(n_comp):
            mask = comp == d
            k = int(mask.sum())
            if k:
                xs[mask] = samplers[d](k, rng)
        return xs, comp + 1

    def score(x, theta):
        w = mixture_full_weights(theta, n_comp)
        xs = np.asarray(x, dtype=float)
        ps = np.stack([np.exp(np.asarray(ld(xs), dtype=float)) for ld in lds])
        fx = np.tensordot(np.asarray(w), ps, axes=1)
        return (ps[:-1] - ps[-1]) / fx

    lo, hi = DEFAULT_WEIGHT_BOUNDS
    return ProposalFamily(
        name=name,
        dim=n_comp - 1,
        log_density=log_density,
        sampler=sampler,
        param_box=ParameterBox([lo] * (n_comp - 1), [hi] * (n_comp - 1)),
        theta0=_frozen(theta0),
        score=score,
        component_log_densities=lds,
        component_samplers=samplers,
    )


def normal_mixture_family(means, sds=None, initial_weights=None, name="normal-mixture") -> ProposalFamily:
    """Mixture of fixed normal components with adaptable weights."""
    means = [float(m) for m in means]
    if sds is None:
        sds = [1.0] * len(means)
    sds = [float(s) for s in sds]
    if len(means) != len(sds):
        raise ValueError("means and sds must have equal length")
    lds = [normal_log_density(m, s) for m, s in zip(means, sds)]
    samplers = [normal_sampler(m, s) for m, s in zip(means, sds)]
    return fixed_component_mixture(lds, samplers, initial_weights, name=name)
