import math

import numpy as np
import pytest

from wardowski_solver.builtins import make_map
from wardowski_solver.comparison import ComparisonFunction
from wardowski_solver.exceptions import (
    EtaInDelta,
    InvalidParameter,
    PrefixTooShort,
    PreconditionViolated,
)
from wardowski_solver.metric_space import FiniteMetricSpace, RealLine, SequenceTrace
from wardowski_solver.models import CheckMode, ConditionKind, RunStatus
from wardowski_solver.solver import classify_operator, picard_iterate
from wardowski_solver.verifier import (
    brute_force_fixed_points,
    check_aF_contractive,
    check_phi_contractive,
    check_strict_and_nonexpansive,
    extract_witness,
    iter_pairs,
    propose_eta,
)
from wardowski_solver.wardowski import lateral_limits, make_log, make_neg_power, make_step_log

BOX = CheckMode.sampled(2000, 11, (-10.0, 10.0))


def harmonic_walk(length: int) -> list[float]:
    points, x = [0.0], 0.0
    for k in range(1, length):
        x += 1.0 / k
        points.append(x)
    return points


@pytest.fixture
def square(resources) -> FiniteMetricSpace:
    return FiniteMetricSpace.from_file(resources / "square.txt")


def random_cloud(rng: np.random.Generator) -> FiniteMetricSpace:
    n = int(rng.integers(2, 13))
    pts = rng.uniform(-1.0, 1.0, size=(n, 2))
    matrix = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    return FiniteMetricSpace(matrix)


def random_images(rng: np.random.Generator, n: int) -> list[int]:
    """Maps onto 1 to 3 points, so contractive ones show up often."""
    size = int(rng.integers(1, min(n, 3) + 1))
    targets = rng.choice(n, size=size, replace=False)
    return [int(rng.choice(targets)) for _ in range(n)]


class TestPairs:
    def test_exhaustive_order(self, square):
        """All ordered pairs, lexicographic."""
        pairs = list(iter_pairs(square, CheckMode.exhaustive()))
        assert len(pairs) == 16
        assert pairs[:3] == [(0, 0), (0, 1), (0, 2)]

    def test_exhaustive_needs_finite(self):
        """The real line cannot be scanned exhaustively."""
        with pytest.raises(PreconditionViolated):
            list(iter_pairs(RealLine(), CheckMode.exhaustive()))

    def test_sampled_is_seeded(self):
        """Same seed, same pairs."""
        a = list(iter_pairs(RealLine(), BOX))
        b = list(iter_pairs(RealLine(), BOX))
        assert a == b
        assert len(a) == 2000


class TestContraction:
    def test_halving_is_aF(self):
        """x/2 under ln with a = ln 2 holds on sampled pairs."""
        T = make_map("scale", RealLine(), {"factor": 0.5})
        report = check_aF_contractive(T, make_log(), math.log(2), BOX)
        assert report.holds
        assert report.condition is ConditionKind.AF
        assert report.pairs_checked == 2000

    def test_translation_fails(self):
        """x + 1 preserves distances; the first sampled pair is the witness."""
        T = make_map("translate", RealLine())
        report = check_aF_contractive(T, make_log(), 0.1, BOX)
        assert not report.holds
        assert report.pairs_checked == 1
        assert report.witness.lhs > report.witness.rhs

    def test_nonpositive_a(self):
        """a must be positive."""
        T = make_map("identity", RealLine())
        with pytest.raises(InvalidParameter):
            check_aF_contractive(T, make_log(), -1.0, BOX)

    def test_constant_on_square(self, square):
        """A constant map collapses every pair and skips x = y."""
        T = make_map("constant", square, {"value": 2})
        report = check_aF_contractive(T, make_log(), 0.05, CheckMode.exhaustive(), slack=0.0)
        assert report.holds
        assert report.pairs_checked == 12

    def test_square_isometry(self, square):
        """Swapping neighbours is an isometry: not strict, nonexpansive."""
        T = make_map("table", square, {"images": [1, 0, 3, 2]})
        report = check_aF_contractive(T, make_log(), 0.05, CheckMode.exhaustive(), slack=0.0)
        assert not report.holds
        assert (report.witness.x, report.witness.y) == (0, 1)
        strict, nonexpansive = check_strict_and_nonexpansive(T, CheckMode.exhaustive())
        assert not strict.holds
        assert nonexpansive.holds
        assert nonexpansive.pairs_checked == 16

    def test_finite_space_is_exact(self):
        """On a finite space an excess of 1e-13 is a violation; the real line tolerates it."""
        space = FiniteMetricSpace([[0.0, 1.0, 1.0], [1.0, 0.0, 0.5], [1.0, 0.5, 0.0]])
        T = make_map("table", space, {"images": [1, 2, 2]})
        a = math.log(2) + 1e-13
        report = check_aF_contractive(T, make_log(), a, CheckMode.exhaustive())
        assert not report.holds
        assert report.witness.lhs > report.witness.rhs
        assert check_aF_contractive(T, make_log(), a, CheckMode.exhaustive(), slack=1e-12).holds
        assert check_aF_contractive(T, make_log(), math.log(2), CheckMode.exhaustive()).holds

    def test_phi_contractive_derived(self):
        """x/2 against the derived phi of (ln, ln 2)."""
        T = make_map("scale", RealLine(), {"factor": 0.5})
        phi = ComparisonFunction.derived(make_log(), math.log(2))
        report = check_phi_contractive(T, phi, CheckMode.sampled(300, 3, (-5.0, 5.0)))
        assert report.holds

    def test_phi_contractive_fails(self):
        """x/2 is not a 0.25 t contraction."""
        T = make_map("scale", RealLine(), {"factor": 0.5})
        report = check_phi_contractive(T, ComparisonFunction.linear(0.25), BOX)
        assert not report.holds

    def test_neg_power_aF(self):
        """x/2 under -t^-1/2 with a = 0.4 on a bounded box."""
        T = make_map("scale", RealLine(), {"factor": 0.5})
        report = check_aF_contractive(T, make_neg_power(0.5), 0.4, CheckMode.sampled(1000, 5, (-0.5, 0.5)))
        assert report.holds


class TestDiscontinuousF:
    def test_step_log_path(self):
        """A jump of F inside the distance range does not break the solver."""
        F = make_step_log(1.0, 1.0)
        T = make_map("scale", RealLine(), {"factor": 0.5})
        assert check_aF_contractive(T, F, 0.5, BOX).holds
        verdict = classify_operator(T, [1.0, 3.0, 7.5, 0.25], 1e-9, 1000)
        assert verdict.label == "globally-strong-tele-picard-evidence"
        left, right = lateral_limits(F, 1.0)
        assert abs(right.to_float() - left.to_float() - 1.0) <= 1e-6


class TestOracle:
    def test_random_finite_spaces(self):
        """Whenever the aF check holds, the fixed point is unique and every run hits it."""
        rng = np.random.default_rng(20240501)
        F = make_log()
        holds = 0
        for _ in range(200):
            space = random_cloud(rng)
            images = random_images(rng, len(space))
            T = make_map("table", space, {"images": images})
            report = check_aF_contractive(T, F, 0.05, CheckMode.exhaustive(), slack=0.0)
            if not report.holds:
                continue
            holds += 1
            fixed = brute_force_fixed_points(space, images)
            assert len(fixed) == 1
            (z,) = fixed
            for x0 in space:
                run = picard_iterate(T, x0, 1e-12, 10 * len(space))
                assert run.status is RunStatus.FIXED_POINT_HIT
                assert run.limit == z
            strict, nonexpansive = check_strict_and_nonexpansive(T, CheckMode.exhaustive())
            assert strict.holds and nonexpansive.holds
        assert holds > 0

    def test_brute_force_callable(self, square):
        """A callable and its table agree."""
        assert brute_force_fixed_points(square, lambda i: i) == {0, 1, 2, 3}
        assert brute_force_fixed_points(square, [1, 0, 3, 2]) == set()


class TestWitness:
    def test_harmonic_walk(self):
        """Harmonic walk of 5000 points at eta = 1."""
        trace = SequenceTrace.from_points(RealLine(), harmonic_walk(5000))
        result = extract_witness(trace, 1.0)
        assert result.j_eta == 1
        assert result.m_seq[0] == 0 and result.n_seq[0] == 2
        assert result.m_seq[1] == 1 and result.n_seq[1] == 4
        assert all(result.checks.values()), result.checks
        assert 0.0 < result.trend["overshoot"] <= 0.01
        assert all(m < n for m, n in zip(result.m_seq, result.n_seq))

    def test_eta_in_delta(self):
        """eta must avoid the excluded scales."""
        trace = SequenceTrace.from_points(RealLine(), harmonic_walk(50))
        with pytest.raises(EtaInDelta):
            extract_witness(trace, 1.0, delta=[1.0])

    def test_empty_pair_set(self):
        """A geometric trace never moves eta = 10 away."""
        trace = SequenceTrace.from_points(RealLine(), [2.0**-k for k in range(30)])
        with pytest.raises(PrefixTooShort) as info:
            extract_witness(trace, 10.0)
        assert info.value.j == 0

    def test_j_max_beyond_prefix(self):
        """Asking for more ranks than the prefix holds."""
        trace = SequenceTrace.from_points(RealLine(), harmonic_walk(50))
        with pytest.raises(PrefixTooShort) as info:
            extract_witness(trace, 1.0, j_max=40)
        assert info.value.j >= 1

    def test_j_max(self):
        """j_max bounds the extraction."""
        trace = SequenceTrace.from_points(RealLine(), harmonic_walk(200))
        result = extract_witness(trace, 1.0, j_max=5)
        assert len(result.m_seq) == 6

    def test_eta_positive(self):
        """eta must be positive."""
        trace = SequenceTrace.from_points(RealLine(), harmonic_walk(10))
        with pytest.raises(InvalidParameter):
            extract_witness(trace, 0.0)


class TestProposeEta:
    def test_largest_gap(self):
        """Midpoint of the widest gap."""
        assert propose_eta([1.0], 0.5, 3.0) == 2.0

    def test_ignores_outside(self):
        """Excluded scales outside [lo, hi] do not matter."""
        assert propose_eta([10.0], 1.0, 2.0) == 1.5

    def test_bad_interval(self):
        """0 < lo < hi."""
        with pytest.raises(InvalidParameter):
            propose_eta([], 2.0, 1.0)
