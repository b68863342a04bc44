import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sais import (
    AdaptationMap,
    ArmSpec,
    GainSchedule,
    IntegralEstimate,
    IterationDiverged,
    ParameterBox,
    ReplicationPlan,
    adapt,
    exp_family_adapter,
    fixed_proposal_estimate,
    frozen_adapter,
    integral_update,
    normal_mean_family,
    replicate_mse,
    standard_normal_target,
)

from conftest import make_batch


def small_plan(adapter=None, arms=None):
    fam = normal_mean_family(1.0, 1.0)
    return ReplicationPlan(
        example="normal-mean",
        target=standard_normal_target(),
        proposal=fam,
        adapter=adapter if adapter is not None else exp_family_adapter(),
        schedule=GainSchedule(1.5, 0.0),
        box=ParameterBox([-20.0], [20.0]),
        iterations=20,
        batch_size=1,
        theta0=(1.0,),
        arms=arms if arms is not None else (
            ArmSpec("adaptive", None),
            ArmSpec("fixed-1", (1.0,)),
            ArmSpec("fixed-2", (0.1,)),
        ),
    )


class TestIntegralUpdate:
    def test_relaxation_toward_batch_mean(self):
        assert integral_update(1.0, make_batch([(0.0, 3.0)]), 0.5) == 2.0

    def test_unit_gain_replaces_estimate(self):
        assert integral_update(123.456, make_batch([(0.0, 0.7)]), 1.0) == 0.7

    def test_custom_integrand(self):
        v = integral_update(0.0, make_batch([(2.0, 0.5)]), 1.0, integrand=lambda x: x * x)
        assert v == 2.0

    def test_batch_mean_over_several_draws(self):
        v = integral_update(0.0, make_batch([(0.0, 1.0), (0.0, 3.0)]), 1.0)
        assert v == 2.0

    def test_validation(self):
        b = make_batch([(0.0, 1.0)])
        with pytest.raises(ValueError):
            integral_update(0.0, [], 0.5)
        for g in (0.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                integral_update(0.0, b, g)

    def test_three_step_running_mean(self):
        v = integral_update(0.0, make_batch([(0.0, 1.0)]), 1.0)
        v = integral_update(v, make_batch([(0.0, 2.0)]), 0.5)
        v = integral_update(v, make_batch([(0.0, 3.0)]), 1.0 / 3.0)
        assert v == 2.0

    @given(st.lists(st.floats(min_value=0.0, max_value=100.0), min_size=1, max_size=40))
    def test_running_mean_identity(self, means):
        v = 0.0
        for t, m in enumerate(means):
            v = integral_update(v, make_batch([(0.0, m)]), 1.0 / (t + 1))
        brute = math.fsum(means) / len(means)
        assert abs(v - brute) <= 1e-12 * max(1.0, abs(brute))


class TestIntegralEstimate:
    def test_from_first_batch(self):
        est = IntegralEstimate.from_first_batch(make_batch([(0.0, 1.4)]))
        assert est.v == 1.4 and est.t == 1

    def test_update_chains(self):
        est = IntegralEstimate.from_first_batch(make_batch([(0.0, 2.0)]))
        est = est.update(make_batch([(0.0, 4.0)]), 0.5)
        assert est.v == 3.0 and est.t == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            IntegralEstimate(math.nan)
        with pytest.raises(ValueError):
            IntegralEstimate(1.0, t=-1)


class TestFixedProposal:
    def test_matching_proposal_estimates_exactly_one(self):
        v = fixed_proposal_estimate(
            standard_normal_target(), normal_mean_family(), [0.0],
            iterations=50, batch_size=2, rng=np.random.default_rng(8),
        )
        assert v == 1.0

    def test_matches_frozen_adapter_run(self):
        fam = normal_mean_family()
        kw = dict(iterations=30, batch_size=3)
        v = fixed_proposal_estimate(
            standard_normal_target(), fam, [1.0], rng=np.random.default_rng(17), **kw
        )
        trace = adapt(
            standard_normal_target(), fam, frozen_adapter(), GainSchedule(),
            fam.param_box, rng=np.random.default_rng(17), theta0=[1.0], **kw
        )
        assert v == trace.v_final

    def test_custom_schedule_forwarded(self):
        fam = normal_mean_family()
        sched = GainSchedule(1.5, 2.0)
        v = fixed_proposal_estimate(
            standard_normal_target(), fam, [1.0],
            iterations=10, batch_size=1, rng=np.random.default_rng(18), schedule=sched,
        )
        trace = adapt(
            standard_normal_target(), fam, frozen_adapter(), sched,
            fam.param_box, 10, 1, np.random.default_rng(18), theta0=[1.0],
        )
        assert v == trace.v_final


class TestAdaptIntegralConsistency:
    def test_trace_v_matches_external_recursion(self):
        sched = GainSchedule(0.8, 2.0)
        trace = adapt(
            standard_normal_target(), normal_mean_family(), exp_family_adapter(),
            sched, ParameterBox([-20.0], [20.0]), 10, 4, np.random.default_rng(55),
        )
        v = trace.mean_w[0]
        assert trace.v[1] == v
        for t in range(1, 10):
            g = sched.effective_gain(t)
            v = v + g * (trace.mean_w[t] - v)
            assert trace.v[t + 1] == v

    def test_unit_gain_iterations_replace_estimate(self):
        # gains 2/1 and 2/2 both cap at 1, so v tracks the newest batch mean
        trace = adapt(
            standard_normal_target(), normal_mean_family(), exp_family_adapter(),
            GainSchedule(2.0, 0.0), ParameterBox([-20.0], [20.0]),
            3, 2, np.random.default_rng(56),
        )
        assert trace.v[1] == trace.mean_w[0]
        assert trace.v[2] == trace.mean_w[1]
        assert trace.v[3] != trace.mean_w[2] or trace.gamma[2] == 1.0


class TestReplicateMSE:
    def test_structure_and_determinism(self):
        plan = small_plan()
        rep1 = replicate_mse(plan, 8, master_seed=4)
        rep2 = replicate_mse(plan, 8, master_seed=4)
        assert [a.name for a in rep1.arms] == ["adaptive", "fixed-1", "fixed-2"]
        for a, b in zip(rep1.arms, rep2.arms):
            np.testing.assert_array_equal(a.values, b.values)
            assert a.mse == b.mse and a.se == b.se and a.diverged == 0
        assert rep1.replications == 8 and rep1.master_seed == 4
        assert "normal-mean" in rep1.config_digest
        with pytest.raises(KeyError):
            rep1.arm("bogus")

    def test_each_replication_reproducible_in_isolation(self):
        plan = small_plan()
        rep = replicate_mse(plan, 4, master_seed=9)
        trace = adapt(
            plan.target, plan.proposal, plan.adapter, plan.schedule, plan.box,
            plan.iterations, plan.batch_size, np.random.default_rng([9, 0, 2]),
            theta0=np.asarray(plan.theta0),
        )
        assert rep.arm("adaptive").values[2] == trace.v_final
        frozen_trace = adapt(
            plan.target, plan.proposal, frozen_adapter(), plan.schedule, plan.box,
            plan.iterations, plan.batch_size, np.random.default_rng([9, 1, 0]),
            theta0=np.asarray([1.0]),
        )
        assert rep.arm("fixed-1").values[0] == frozen_trace.v_final

    def test_streams_differ_across_reps_and_arms(self):
        rep = replicate_mse(small_plan(), 6, master_seed=2)
        vals = rep.arm("adaptive").values
        assert len(set(vals.tolist())) == 6
        assert rep.arm("adaptive").values[0] != rep.arm("fixed-1").values[0]

    def test_mse_and_se_formulas(self):
        rep = replicate_mse(small_plan(), 16, master_seed=1)
        arm = rep.arm("fixed-2")
        sq = (arm.values - 1.0) ** 2
        assert arm.mse == pytest.approx(sq.mean(), rel=1e-15)
        assert arm.se == pytest.approx(sq.std(ddof=1) / 4.0, rel=1e-12)
        assert arm.mean == pytest.approx(arm.values.mean(), rel=1e-15)

    def test_divergent_arm_aborts(self):
        exploding = AdaptationMap("explode", "any", lambda th, b: np.array([math.nan]))
        plan = small_plan(adapter=exploding, arms=(ArmSpec("adaptive", None),))
        with pytest.raises(IterationDiverged):
            replicate_mse(plan, 8, master_seed=0)

    def test_requires_two_replications(self):
        with pytest.raises(ValueError):
            replicate_mse(small_plan(), 1)
