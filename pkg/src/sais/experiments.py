"""Experiment presets, configuration handling, and reproduction harnesses.

Three presets are built in, one per proposal family. Each runs an
adaptive arm against two frozen-proposal arms under the same gain
schedule, integral recursion, and sample budget, so the arms differ only
in whether the proposal moves.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .adapters import (
    cauchy_mm_adapter,
    exp_family_adapter,
    frozen_adapter,
    mixture_indicator_adapter,
    mixture_rb_adapter,
)
from .densities import (
    ParameterBox,
    cauchy_scale_family,
    normal_mean_family,
    normal_mixture_family,
    normal_mixture_target,
    standard_normal_target,
)
from .engine import AdaptationTrace, GainSchedule, adapt
from .errors import ConfigError
from .estimator import ArmSpec, MSEReport, ReplicationPlan, replicate_mse

PRESET_NAMES = ("normal-mean", "cauchy-scale", "mixture-weights")
ADAPTERS_BY_EXPERIMENT = {
    "normal-mean": ("exp-family",),
    "cauchy-scale": ("cauchy-mm",),
    "mixture-weights": ("mixture-rb", "mixture-indicator"),
}


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description.

    theta0 and the fixed_arms entries are free-parameter vectors; box is a
    list of [lo, hi] pairs per coordinate. curvature is read only by the
    cauchy-mm adapter.
    """

    experiment: str
    adapter: str
    curvature: Optional[object]
    theta0: List[float]
    fixed_arms: List[List[float]]
    box: List[List[float]]
    iterations: int
    batch_size: int
    gain_c: float
    gain_t0: float
    replications: int = 1000
    seed: int = 0
    out: Optional[str] = None
    format: str = "csv"
    diagnostics: bool = False


def preset(name: str) -> ExperimentConfig:
    """Built-in experiment configuration by name.

    The gain constants are tuned per family: a schedule that suits the
    fast-contracting mean update stalls the scale update and vice versa.
    Budgets, starting points, and comparison arms follow the standard
    three-benchmark setup (500 draws per replication in each case).
    """
    if name == "normal-mean":
        return ExperimentConfig(
            experiment=name,
            adapter="exp-family",
            curvature=None,
            theta0=[1.0],
            fixed_arms=[[1.0], [0.1]],
            box=[[-20.0, 20.0]],
            iterations=500,
            batch_size=1,
            gain_c=1.5,
            gain_t0=0.0,
        )
    if name == "cauchy-scale":
        return ExperimentConfig(
            experiment=name,
            adapter="cauchy-mm",
            curvature="current",
            theta0=[4.0],
            fixed_arms=[[4.0], [1.21]],
            box=[[0.01, 100.0]],
            iterations=250,
            batch_size=2,
            gain_c=1.35,
            gain_t0=1.0,
        )
    if name == "mixture-weights":
        return ExperimentConfig(
            experiment=name,
            adapter="mixture-rb",
            curvature=None,
            theta0=[0.5],
            fixed_arms=[[0.5], [0.35]],
            box=[[0.001, 0.999]],
            iterations=500,
            batch_size=1,
            gain_c=2.5,
            gain_t0=80.0,
        )
    raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(PRESET_NAMES)}")


def _require_vector(value, what: str) -> List[float]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{what} must be a nonempty list of numbers, got {value!r}")
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must contain only numbers, got {value!r}") from None


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check field types, ranges, and cross-field consistency."""
    if cfg.experiment not in PRESET_NAMES:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; choose from {', '.join(PRESET_NAMES)}")
    allowed = ADAPTERS_BY_EXPERIMENT[cfg.experiment]
    if cfg.adapter not in allowed:
        raise ConfigError(
            f"adapter {cfg.adapter!r} does not fit {cfg.experiment}; allowed: {', '.join(allowed)}"
        )
    if cfg.adapter == "cauchy-mm":
        c = cfg.curvature
        ok = c in ("floor", "current", "absorbed") or (
            isinstance(c, (int, float)) and not isinstance(c, bool) and float(c) < 0
        )
        if not ok:
            raise ConfigError(
                f"curvature must be 'floor', 'current', 'absorbed', or a negative number, got {c!r}"
            )
        if cfg.batch_size < 2:
            raise ConfigError("cauchy-mm needs batch_size >= 2; a single draw degenerates the scale fit")
    elif cfg.curvature is not None:
        raise ConfigError("curvature applies only to the cauchy-mm adapter")
    cfg.theta0 = _require_vector(cfg.theta0, "theta0")
    if not isinstance(cfg.fixed_arms, (list, tuple)):
        raise ConfigError("fixed_arms must be a list of parameter vectors")
    cfg.fixed_arms = [_require_vector(arm, f"fixed_arms[{i}]") for i, arm in enumerate(cfg.fixed_arms)]
    if not isinstance(cfg.box, (list, tuple)) or not cfg.box:
        raise ConfigError("box must be a list of [lo, hi] pairs")
    pairs = []
    for i, pair in enumerate(cfg.box):
        p = _require_vector(pair, f"box[{i}]")
        if len(p) != 2 or not p[0] < p[1]:
            raise ConfigError(f"box[{i}] must be [lo, hi] with lo < hi, got {pair!r}")
        pairs.append(p)
    cfg.box = pairs
    if len(cfg.theta0) != len(cfg.box):
        raise ConfigError(f"theta0 has {len(cfg.theta0)} coordinates but box has {len(cfg.box)}")
    for arm in cfg.fixed_arms:
        if len(arm) != len(cfg.theta0):
            raise ConfigError(f"fixed arm {arm} does not match theta0 dimension {len(cfg.theta0)}")
    box = ParameterBox.from_pairs(cfg.box)
    for label, vec in [("theta0", cfg.theta0)] + [
        (f"fixed_arms[{i}]", arm) for i, arm in enumerate(cfg.fixed_arms)
    ]:
        if not box.contains(vec):
            raise ConfigError(f"{label} = {vec} lies outside the box {cfg.box}")
    try:
        cfg.iterations = int(cfg.iterations)
        cfg.batch_size = int(cfg.batch_size)
        cfg.replications = int(cfg.replications)
        cfg.seed = int(cfg.seed)
        cfg.gain_c = float(cfg.gain_c)
        cfg.gain_t0 = float(cfg.gain_t0)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"numeric config field has a non-numeric value: {e}") from None
    if cfg.iterations < 1:
        raise ConfigError("iterations must be >= 1")
    if cfg.batch_size < 1:
        raise ConfigError("batch_size must be >= 1")
    if cfg.replications < 2:
        raise ConfigError("replications must be >= 2")
    if not (cfg.gain_c > 0 and math.isfinite(cfg.gain_c)):
        raise ConfigError("gain_c must be positive and finite")
    if not (cfg.gain_t0 >= 0 and math.isfinite(cfg.gain_t0)):
        raise ConfigError("gain_t0 must be nonnegative and finite")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be 'csv' or 'json', got {cfg.format!r}")
    if cfg.out is not None and not isinstance(cfg.out, str):
        raise ConfigError("out must be a path string or null")
    if not isinstance(cfg.diagnostics, bool):
        raise ConfigError("diagnostics must be true or false")
    return cfg


def parse_config(source) -> ExperimentConfig:
    """Build a validated config from JSON text or a plain dict.

    `experiment` is required; it selects preset defaults which the other
    keys override. Unknown keys are rejected so typos fail loudly.
    """
    if isinstance(source, (bytes, str)):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from None
    elif isinstance(source, dict):
        data = dict(source)
    else:
        raise ConfigError(f"config must be JSON text or a dict, got {type(source).__name__}")
    if not isinstance(data, dict):
        raise ConfigError("config JSON must be an object")
    if "experiment" not in data:
        raise ConfigError("config is missing the 'experiment' field")
    cfg = preset(data.pop("experiment"))
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
    for key, value in data.items():
        setattr(cfg, key, value)
    return validate_config(cfg)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical JSON form; parse and serialize are mutually idempotent."""
    return json.dumps(dataclasses.asdict(cfg), sort_keys=True, indent=2) + "\n"


def build_plan(cfg: ExperimentConfig) -> ReplicationPlan:
    """Materialize the target, family, adapter, and arms for a config."""
    validate_config(cfg)
    if cfg.experiment == "normal-mean":
        target = standard_normal_target()
        family = normal_mean_family(1.0, cfg.theta0[0])
    elif cfg.experiment == "cauchy-scale":
        target = standard_normal_target()
        family = cauchy_scale_family(cfg.theta0[0])
    else:
        target = normal_mixture_target((1.0 / 3.0, 2.0 / 3.0), (-1.0, 2.0))
        family = normal_mixture_family((-1.0, 2.0), initial_weights=cfg.theta0)
    box = ParameterBox.from_pairs(cfg.box)
    if cfg.adapter == "exp-family":
        adapter = exp_family_adapter()
    elif cfg.adapter == "cauchy-mm":
        adapter = cauchy_mm_adapter(curvature=cfg.curvature, floor=box.lower[0])
    elif cfg.adapter == "mixture-rb":
        adapter = mixture_rb_adapter(family)
    else:
        adapter = mixture_indicator_adapter()
    arms = [ArmSpec("adaptive", None)]
    arms += [ArmSpec(f"fixed-{i + 1}", tuple(arm)) for i, arm in enumerate(cfg.fixed_arms)]
    return ReplicationPlan(
        example=cfg.experiment,
        target=target,
        proposal=family,
        adapter=adapter,
        schedule=GainSchedule(cfg.gain_c, cfg.gain_t0),
        box=box,
        iterations=cfg.iterations,
        batch_size=cfg.batch_size,
        theta0=tuple(cfg.theta0),
        arms=tuple(arms),
    )


def trace_csv(trace: AdaptationTrace) -> str:
    """Render a trace as CSV with one row per iteration index 0..T."""
    cols = ["t"] + [f"theta_{d + 1}" for d in range(trace.dim)] + ["v", "mean_w", "gamma"]
    with_diag = trace.ess is not None
    if with_diag:
        cols += ["ess", "kl"]
    lines = [",".join(cols)]
    for t in range(trace.iterations + 1):
        row = [str(t)]
        row += [repr(float(x)) for x in trace.theta[t]]
        row += [repr(float(trace.v[t])), repr(float(trace.mean_w[t])), repr(float(trace.gamma[t]))]
        if with_diag:
            row += [repr(float(trace.ess[t])), repr(float(trace.kl[t]))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def trace_json(trace: AdaptationTrace) -> str:
    payload = {
        "seed": list(trace.seed) if isinstance(trace.seed, (tuple, list)) else trace.seed,
        "t": list(range(trace.iterations + 1)),
        "theta": [[float(x) for x in row] for row in trace.theta],
        "v": [float(x) for x in trace.v],
        "mean_w": [float(x) for x in trace.mean_w],
        "gamma": [float(x) for x in trace.gamma],
    }
    if trace.ess is not None:
        payload["ess"] = [float(x) for x in trace.ess]
        payload["kl"] = [float(x) for x in trace.kl]
    return json.dumps(payload, sort_keys=True) + "\n"


def mse_csv(reports: Sequence[MSEReport]) -> str:
    lines = ["example,arm,mse,se,replications"]
    for rep in reports:
        for arm in rep.arms:
            lines.append(f"{rep.example},{arm.name},{arm.mse:.10e},{arm.se:.10e},{rep.replications}")
    return "\n".join(lines) + "\n"


def mse_json(reports: Sequence[MSEReport]) -> str:
    payload = [
        {
            "example": rep.example,
            "config_digest": rep.config_digest,
            "master_seed": rep.master_seed,
            "replications": rep.replications,
            "arms": [
                {
                    "name": a.name,
                    "mse": a.mse,
                    "se": a.se,
                    "mean": a.mean,
                    "diverged": a.diverged,
                }
                for a in rep.arms
            ],
        }
        for rep in reports
    ]
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def format_table1(reports: Sequence[MSEReport]) -> str:
    """Fixed-width table of per-arm MSE cells with their standard errors."""
    arm_names = [a.name for a in reports[0].arms]
    width = 26
    lines = ["mean squared error of the integral estimate (truth = 1)", ""]
    header = f"{'arm':<12}" + "".join(f"{rep.example:>{width}}" for rep in reports)
    lines.append(header)
    for name in arm_names:
        cells = []
        for rep in reports:
            arm = rep.arm(name)
            cells.append(f"{arm.mse:.3e} ({arm.se:.1e})")
        lines.append(f"{name:<12}" + "".join(f"{c:>{width}}" for c in cells))
    lines.append(
        f"{'reps':<12}" + "".join(f"{rep.replications:>{width}}" for rep in reports)
    )
    return "\n".join(lines) + "\n"


def _write(path: str, text: str) -> str:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def run(cfg: ExperimentConfig) -> Tuple[MSEReport, List[str]]:
    """Execute one experiment: per-arm trace files plus the MSE report.

    The written trace of each arm is its replication 0, so it matches the
    first entry of the replication harness exactly. Returns the report
    and the list of written file paths.
    """
    plan = build_plan(cfg)
    out_dir = cfg.out if cfg.out else f"sais-{cfg.experiment}"
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for arm_index, arm in enumerate(plan.arms):
        frozen = arm.theta is not None
        seed_key = [cfg.seed, arm_index, 0]
        trace = adapt(
            plan.target,
            plan.proposal,
            frozen_adapter() if frozen else plan.adapter,
            plan.schedule,
            plan.box,
            plan.iterations,
            plan.batch_size,
            np.random.default_rng(seed_key),
            theta0=np.asarray(arm.theta if frozen else plan.theta0, dtype=float),
            diagnostics=cfg.diagnostics,
            seed_label=tuple(seed_key),
        )
        if cfg.format == "csv":
            paths.append(_write(os.path.join(out_dir, f"trace_{arm.name}.csv"), trace_csv(trace)))
        else:
            paths.append(_write(os.path.join(out_dir, f"trace_{arm.name}.json"), trace_json(trace)))
    report = replicate_mse(plan, cfg.replications, cfg.seed)
    if cfg.format == "csv":
        paths.append(_write(os.path.join(out_dir, "mse.csv"), mse_csv([report])))
    else:
        paths.append(_write(os.path.join(out_dir, "mse.json"), mse_json([report])))
    return report, paths


def table1(master_seed: int = 0, replications: int = 1000, out: Optional[str] = None):
    """Run all three presets and format the 3x3 error table.

    Returns (reports, formatted text). With `out` set, writes table1.txt
    and table1.csv into that directory; given the same seed the files are
    byte-identical across runs.
    """
    reports = []
    for name in PRESET_NAMES:
        cfg = preset(name)
        cfg.replications = int(replications)
        cfg.seed = int(master_seed)
        reports.append(replicate_mse(build_plan(cfg), cfg.replications, cfg.seed))
    text = format_table1(reports)
    if out:
        os.makedirs(out, exist_ok=True)
        _write(os.path.join(out, "table1.txt"), text)
        _write(os.path.join(out, "table1.csv"), mse_csv(reports))
    return reports, text


def density_curve(
    cfg: ExperimentConfig,
    iterations: Sequence[int] = (0, 100),
    grid: Tuple[float, float, float] = (-5.0, 6.0, 0.01),
):
    """Tabulate target density against proposal snapshots along one run.

    Returns (column names, row matrix). Snapshot t uses the parameter the
    run held entering iteration t; snapshot 0 is the starting proposal.
    """
    its = sorted({int(t) for t in iterations})
    if not its or its[0] < 0:
        raise ConfigError(f"iterations list must be nonnegative, got {list(iterations)!r}")
    lo, hi, step = (float(g) for g in grid)
    if not (lo < hi and step > 0):
        raise ConfigError(f"grid must be (lo, hi, step) with lo < hi and step > 0, got {grid!r}")
    plan = build_plan(cfg)
    trace = adapt(
        plan.target,
        plan.proposal,
        plan.adapter,
        plan.schedule,
        plan.box,
        max(1, its[-1]),
        plan.batch_size,
        np.random.default_rng([cfg.seed, 0, 0]),
        theta0=plan.theta0,
    )
    n = int(round((hi - lo) / step)) + 1
    xs = np.linspace(lo, hi, n)
    cols = ["x", "target"] + [f"proposal_t{t}" for t in its]
    columns = [xs, np.asarray(plan.target.density(xs), dtype=float)]
    for t in its:
        th = trace.theta[t]
        columns.append(np.asarray(plan.proposal.density(xs, th), dtype=float))
    return cols, np.column_stack(columns)


def density_curve_csv(cols, rows) -> str:
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def self_check(seed: int = 0) -> List[Tuple[str, bool, str]]:
    """Fast numerical self-checks; returns (name, passed, detail) triples.

    Covers density normalization, weight identities, the score and
    curvature formulas, surrogate domination, the running-mean identity of
    the integral recursion, and agreement of the two mixture updates.
    """
    from .adapters import (
        cauchy_curvature_bound,
        cauchy_loglik,
        cauchy_minorizer,
        cauchy_score,
        mixture_indicator_map,
        mixture_rb_map,
    )
    from .densities import WeightedSample, draw_batch, real_line_quadrature
    from .diagnostics import effective_sample_size, fd_check, kl_divergence, minorization_check
    from .estimator import integral_update

    rng = np.random.default_rng(seed)
    checks: List[Tuple[str, bool, str]] = []

    target = standard_normal_target()
    mix_target = normal_mixture_target((1.0 / 3.0, 2.0 / 3.0), (-1.0, 2.0))
    worst = max(abs(target.quadrature_mass() - 1.0), abs(mix_target.quadrature_mass() - 1.0))
    checks.append(("target-normalization", worst < 1e-6, f"worst |mass-1| = {worst:.2e}"))

    worst = 0.0
    for family, theta in (
        (normal_mean_family(), [-3.0]),
        (cauchy_scale_family(), [0.5]),
        (cauchy_scale_family(), [25.0]),
        (normal_mixture_family((-1.0, 2.0)), [0.2]),
    ):
        mass = real_line_quadrature(lambda x: family.density(x, theta))
        worst = max(worst, abs(mass - 1.0))
    checks.append(("proposal-normalization", worst < 1e-6, f"worst |mass-1| = {worst:.2e}"))

    batch = draw_batch(normal_mean_family(), [0.0], target, 100, rng)
    worst = max(abs(s.w - 1.0) for s in batch)
    checks.append(("unit-weight-identity", worst == 0.0, f"worst |w-1| = {worst:.2e}"))

    worst = 0.0
    for _ in range(5):
        u = float(rng.uniform(0.3, 6.0))
        b = [WeightedSample(float(x), float(w)) for x, w in zip(rng.standard_cauchy(20), rng.uniform(0.1, 2.0, 20))]
        res = fd_check(lambda v: cauchy_loglik(v, b), lambda v: cauchy_score(v, b), u, 1e-5 * max(1.0, u))
        worst = max(worst, res.rel_error)
    checks.append(("score-gradient", worst < 1e-6, f"worst fd rel error = {worst:.2e}"))

    violations = 0
    for _ in range(1000):
        u = float(rng.uniform(0.05, 20.0))
        b = [WeightedSample(float(x), float(w)) for x, w in zip(rng.standard_cauchy(10), rng.uniform(0.0, 3.0, 10))]
        value, bound = cauchy_curvature_bound(u, b)
        if value < bound:
            violations += 1
    checks.append(("curvature-bound", violations == 0, f"{violations} violations in 1000 draws"))

    worst = -math.inf
    grid = np.linspace(0.01, 50.0, 100)
    for _ in range(5):
        u = float(rng.uniform(0.5, 8.0))
        b = [WeightedSample(float(x), float(w)) for x, w in zip(rng.standard_cauchy(20), rng.uniform(0.1, 2.0, 20))]
        rep = minorization_check(cauchy_minorizer(u, b), lambda v: cauchy_loglik(v, b), grid)
        worst = max(worst, rep.worst_violation, rep.tangency_gap)
    checks.append(("surrogate-domination", worst <= 1e-10, f"worst violation = {worst:.2e}"))

    ok = True
    for n in (1, 2, 17):
        ws = rng.uniform(0.0, 5.0, n)
        ws[0] = max(ws[0], 1e-3)
        e = effective_sample_size(ws)
        ok = ok and 1.0 <= e <= n * (1.0 + 1e-12)
    checks.append(("ess-bounds", ok, "1 <= ess <= batch size on random weights"))

    kl = kl_divergence(target, normal_mean_family(), [0.0], resolution=20000)
    checks.append(("self-divergence", abs(kl.value) <= 1e-8, f"|kl| = {abs(kl.value):.2e}"))

    worst = 0.0
    for _ in range(10):
        means = rng.normal(1.0, 0.3, int(rng.integers(3, 60)))
        v = ref = means[0]
        for t, m in enumerate(means[1:], start=1):
            b = [WeightedSample(0.0, float(m))]
            v = integral_update(v, b, 1.0 / (t + 1))
            ref = (ref * t + m) / (t + 1)
        worst = max(worst, abs(v - ref))
    checks.append(("running-mean-identity", worst <= 1e-12, f"worst |recursion - mean| = {worst:.2e}"))

    mix = normal_mixture_family((-1.0, 2.0))
    b = draw_batch(mix, [0.4], mix_target, 20000, rng)
    rb = mixture_rb_map([0.4], b, mix.component_log_densities)
    ind = mixture_indicator_map([0.4], b)
    per = np.array([s.w * ((s.component_index == 1) - _responsibility(mix, 0.4, s.x)) for s in b])
    se = float(per.std(ddof=1) / math.sqrt(len(b)))
    diff = abs(float(ind[0] - rb[0]))
    checks.append(
        ("responsibility-indicator-agreement", diff <= 5 * se, f"|diff| = {diff:.2e}, se = {se:.2e}")
    )
    return checks


def _responsibility(family, alpha: float, x: float) -> float:
    l1 = math.log(alpha) + family.component_log_densities[0](x)
    l2 = math.log(1.0 - alpha) + family.component_log_densities[1](x)
    m = max(l1, l2)
    e1, e2 = math.exp(l1 - m), math.exp(l2 - m)
    return e1 / (e1 + e2)
