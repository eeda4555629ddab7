import math

import numpy as np
import pytest

from wardowski_solver import solver
from wardowski_solver.builtins import make_map
from wardowski_solver.comparison import ComparisonFunction, ladder_check, phi_series
from wardowski_solver.exceptions import PreconditionViolated, RankNotFound, SeriesNotConvergent
from wardowski_solver.interfaces import ISelfMap
from wardowski_solver.metric_space import EuclideanSpace, FiniteMetricSpace, RealLine, SequenceTrace
from wardowski_solver.models import RunStatus
from wardowski_solver.solver import (
    PicardRun,
    SelfMap,
    classify_operator,
    hyers_ulam_bound,
    hyers_ulam_certificate,
    hyers_ulam_profile,
    picard_iterate,
    picard_runs,
    tail_bound_regular,
    telescopic_certificate,
)
from wardowski_solver.wardowski import make_log, make_neg_power


@pytest.fixture
def half() -> SelfMap:
    return make_map("scale", RealLine(), {"factor": 0.5})


class TestPicardIterate:
    def test_halving_converges(self, half):
        """x/2 from 1 at eps 1e-9 converges at n = 36."""
        run = picard_iterate(half, 1.0, 1e-9, 1000)
        assert run.status is RunStatus.CONVERGED
        assert len(run.trace.rho) == 37
        assert run.trace.rho[0] == 0.5
        assert run.limit == 2.0**-37
        assert all(r < 1e-9 for r in run.trace.rho[-8:])

    def test_trace_is_consistent(self, half):
        """Recorded rho are the distances of the recorded points."""
        assert picard_iterate(half, 3.0, 1e-6, 100).trace.is_valid()

    def test_fixed_point_at_start(self):
        """The identity hits its fixed point at index 0."""
        run = picard_iterate(make_map("identity", RealLine()), 4.0, 1e-9, 10)
        assert run.status is RunStatus.FIXED_POINT_HIT
        assert run.status_index == 0
        assert run.limit == 4.0

    def test_constant_map_hits_after_one_step(self):
        """A constant map reaches its value, then stays."""
        run = picard_iterate(make_map("constant", RealLine(), {"value": 2.0}), 5.0, 1e-9, 10)
        assert run.status is RunStatus.FIXED_POINT_HIT
        assert run.status_index == 1
        assert run.limit == 2.0
        assert run.positive_rho == (3.0,)

    def test_translation_exhausts_budget(self):
        """x + 1 never settles and never speeds up."""
        run = picard_iterate(make_map("translate", RealLine()), 0.0, 1e-9, 50)
        assert run.status is RunStatus.BUDGET_EXHAUSTED
        assert len(run.trace.rho) == 50
        assert run.limit is None

    def test_expanding_map_diverges(self):
        """2x + 1 has strictly increasing rho."""
        T = make_map("affine", RealLine(), {"factor": 2.0, "shift": 1.0})
        run = picard_iterate(T, 1.0, 1e-9, 1000)
        assert run.status is RunStatus.DIVERGENCE_SUSPECTED
        assert len(run.trace.rho) == 33

    def test_euclidean(self):
        """Scaling toward a centre in the plane converges to the centre."""
        T = make_map("scale", EuclideanSpace(2), {"factor": 0.25, "center": [1.0, -1.0]})
        run = picard_iterate(T, np.array([5.0, 3.0]), 1e-10, 500)
        assert run.status is RunStatus.CONVERGED
        np.testing.assert_allclose(run.limit, [1.0, -1.0], atol=1e-9)

    def test_budget_precondition(self, half):
        """max_iter must be positive."""
        with pytest.raises(PreconditionViolated):
            picard_iterate(half, 1.0, 1e-9, 0)

    def test_summary(self, half):
        """The JSON summary carries plain floats."""
        summary = picard_iterate(half, 1.0, 1e-9, 1000).to_summary()
        assert summary.iterations == 37
        assert summary.start == 1.0
        assert summary.status is RunStatus.CONVERGED

    @pytest.mark.anyio
    async def test_concurrent_runs_keep_start_order(self, half):
        """Worker-thread runs come back in start order."""
        starts = [1.0, -3.0, 10.0, 0.0]
        runs = await picard_runs(half, starts, 1e-9, 1000)
        assert [run.trace.points[0] for run in runs] == starts
        assert runs[3].status is RunStatus.FIXED_POINT_HIT


class TestLadderAlongRuns:
    def test_real_line_ladder(self, half):
        """F(rho_n) <= F(rho_0) - n a along x/2 under ln with a = ln 2."""
        run = picard_iterate(half, 1.0, 1e-9, 1000)
        check = ladder_check(make_log(), math.log(2), run.trace.rho, slack=1e-12)
        assert check.step_holds and check.cumulative_holds

    def test_finite_space_ladder_exact(self, resources):
        """On the unit square a constant map collapses in one step; no slack needed."""
        space = FiniteMetricSpace.from_file(resources / "square.txt")
        T = make_map("constant", space, {"value": 2})
        run = picard_iterate(T, 0, 1e-9, 10)
        check = ladder_check(make_log(), 0.05, run.trace.rho, slack=0.0)
        assert check.step_holds and check.cumulative_holds


class TestHyersUlam:
    def test_linear_bound(self):
        """Phi(0.1) for phi = 0.9 t is 1."""
        bound = hyers_ulam_bound(ComparisonFunction.linear(0.9).series, 0.1)
        assert bound == pytest.approx(1.0, rel=1e-8)

    def test_zero_residual(self):
        """A fixed start has bound 0."""
        assert hyers_ulam_bound(ComparisonFunction.linear(0.5).series, 0.0) == 0.0

    def test_not_convergent(self):
        """A harmonic series gives no bound."""
        phi = ComparisonFunction.user(lambda t: t / (1.0 + t))
        with pytest.raises(SeriesNotConvergent):
            hyers_ulam_bound(lambda d: phi_series(phi, d, n_cap=1000), 1.0)

    def test_bound_at_every_iterate(self, half):
        """dist(x_n, 0) <= Phi(rho_n) = 2 rho_n along the halving run."""
        run = picard_iterate(half, 1.0, 1e-9, 1000)
        profile = hyers_ulam_profile(run, ComparisonFunction.linear(0.5))
        for x, bound in zip(run.trace.points, profile):
            assert abs(x) <= bound * (1.0 + 1e-9)

    def test_certificate_covers_fixed_point(self, half):
        """x/2 from 1: d(x0, 0) = 1 <= Phi(1/2)."""
        run = picard_iterate(half, 1.0, 1e-9, 1000)
        cert = hyers_ulam_certificate(run, ComparisonFunction.linear(0.5))
        assert cert.residual == 0.5
        assert cert.bound >= 1.0 - 1e-9
        assert cert.bound == pytest.approx(1.0, abs=1e-9)

    def test_profile(self, half):
        """One bound per recorded rho, each 2 rho_n."""
        run = picard_iterate(half, 1.0, 1e-9, 1000)
        profile = hyers_ulam_profile(run, ComparisonFunction.linear(0.5))
        assert len(profile) == len(run.trace.rho)
        for r, bound in zip(run.trace.rho, profile):
            assert bound == pytest.approx(2.0 * r, rel=1e-8)


class TestTailBound:
    def test_regular_tail(self, half):
        """x/2 under -t^-1/2 with a = 0.4 and k = 0.75 keeps the tail bound."""
        run = picard_iterate(half, 1.0, 1e-9, 1000)
        cert = tail_bound_regular(run, make_neg_power(0.5), 0.4, 0.75)
        assert cert.holds_on_prefix
        assert cert.from_rank >= 1
        assert cert.tail_sum_bound >= sum(run.trace.rho[cert.from_rank :])

    def test_fixed_point_at_start(self):
        """No positive rho: trivial certificate."""
        run = picard_iterate(make_map("identity", RealLine()), 1.0, 1e-9, 10)
        cert = tail_bound_regular(run, make_neg_power(0.5), 0.4, 0.75)
        assert cert.holds_on_prefix
        assert cert.tail_sum_bound == 0.0

    def test_translation_withheld(self):
        """x + 1 keeps rho = 1: the bound breaks beyond the rank and nothing is certified."""
        run = picard_iterate(make_map("translate", RealLine()), 0.0, 1e-9, 50)
        with pytest.raises(RankNotFound):
            tail_bound_regular(run, make_neg_power(0.5), 0.4, 0.75, beta=1.0)


class TestTelescopic:
    def test_geometric_tail(self, half):
        """Partial sum plus tail estimate recovers d(x0, 0) = 1."""
        cert = telescopic_certificate(picard_iterate(half, 1.0, 1e-9, 1000))
        assert cert.ratio == pytest.approx(0.5)
        assert cert.partial + cert.tail_estimate == pytest.approx(1.0, abs=1e-9)

    def test_fixed_point_hit(self):
        """A hit closes the sum."""
        run = picard_iterate(make_map("constant", RealLine(), {"value": 2.0}), 5.0, 1e-9, 10)
        cert = telescopic_certificate(run)
        assert cert.partial == 3.0
        assert cert.tail_estimate == 0.0

    def test_no_ratio(self):
        """Unit steps have no geometric tail."""
        run = picard_iterate(make_map("translate", RealLine()), 0.0, 1e-9, 40)
        cert = telescopic_certificate(run)
        assert cert.partial == 40.0
        assert cert.tail_estimate is None

    def test_harmonic_ratios(self):
        """rho_n = 1/(n+1) has ratios creeping to 1: no estimate."""
        points = [0.0]
        for k in range(1, 200):
            points.append(points[-1] + 1.0 / k)
        run = PicardRun(
            trace=SequenceTrace.from_points(RealLine(), points),
            status=RunStatus.BUDGET_EXHAUSTED,
            eps=1e-9,
        )
        assert telescopic_certificate(run).tail_estimate is None


class TestClassifyOperator:
    def test_halving_globally_strong(self, half):
        """x/2 from four starts is globally strong and tele."""
        verdict = classify_operator(half, [1.0, 3.0, 10.0, 0.5], 1e-9, 1000)
        assert verdict.picard and verdict.strong and verdict.globally_strong and verdict.tele
        assert verdict.label == "globally-strong-tele-picard-evidence"

    def test_translation(self):
        """x + 1 has no Picard evidence."""
        verdict = classify_operator(make_map("translate", RealLine()), [0.0, 1.0], 1e-9, 100)
        assert not verdict.picard
        assert verdict.label == "no-picard-evidence"

    def test_identity_not_globally_strong(self):
        """Every point is fixed: limits disagree."""
        verdict = classify_operator(make_map("identity", RealLine()), [0.0, 1.0], 1e-9, 10)
        assert verdict.picard and verdict.strong
        assert not verdict.globally_strong
        assert verdict.label == "strong-tele-picard-evidence"

    def test_identity_on_two_points(self):
        """Two fixed points: strong, not globally strong."""
        space = FiniteMetricSpace([[0.0, 1.0], [1.0, 0.0]])
        verdict = classify_operator(make_map("identity", space), [0, 1], 1e-9, 10)
        assert verdict.strong and not verdict.globally_strong
        assert verdict.limits == [0, 1]

    def test_needs_two_starts(self, half):
        """One start is below the precondition."""
        with pytest.raises(PreconditionViolated):
            classify_operator(half, [1.0], 1e-9, 100)

    def test_runs_each_start_in_worker_threads(self, half, mocker):
        """Classification goes through the concurrent runner, one run per start."""
        runner_spy = mocker.spy(solver, "picard_runs")
        iterate_spy = mocker.spy(solver, "picard_iterate")
        verdict = classify_operator(half, [1.0, 3.0, 10.0], 1e-9, 1000)
        assert runner_spy.call_count == 1
        assert sorted(call.args[1] for call in iterate_spy.call_args_list) == [1.0, 3.0, 10.0]
        assert verdict.statuses == [RunStatus.CONVERGED] * 3


class TestSelfMap:
    @pytest.mark.parametrize(
        "name, space, params",
        [
            ("scale", RealLine(), {"factor": 0.5}),
            ("affine", EuclideanSpace(2), {"factor": 0.25, "shift": 1.0}),
            ("table", FiniteMetricSpace([[0.0, 1.0], [1.0, 0.0]]), {"images": [1, 1]}),
        ],
    )
    def test_builtins_satisfy_protocol(self, name, space, params):
        """Registered maps expose space, name and a call."""
        T = make_map(name, space, params)
        assert isinstance(T, ISelfMap)
        assert T.space is space

    def test_plain_callable_is_not_a_self_map(self):
        """A bare function has no space attached."""
        assert not isinstance(lambda x: x, ISelfMap)
