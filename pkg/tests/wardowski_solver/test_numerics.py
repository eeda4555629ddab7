import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from wardowski_solver.exceptions import (
    BudgetExhausted,
    InvalidParameter,
    PreconditionViolated,
)
from wardowski_solver.numerics import (
    NEG_INF,
    ExtReal,
    Ordering,
    Tolerance,
    ext_compare,
    ext_le,
    geometric_ratio,
    locate_sup_below,
    monotone_sup_below,
)

finite_floats = st.floats(min_value=-1e9, max_value=1e9, allow_nan=False)


def step(s: float) -> float:
    return 0.0 if s < 1.0 else 2.0


class TestExtReal:
    def test_nan_rejected(self):
        """NaN cannot be stored in the finite variant."""
        with pytest.raises(InvalidParameter):
            ExtReal(math.nan)

    def test_infinite_finite_variant_rejected(self):
        """Plain infinities must go through coerce."""
        with pytest.raises(InvalidParameter):
            ExtReal(math.inf)

    def test_coerce_negative_infinity(self):
        """-inf becomes the NegInf variant."""
        assert ExtReal.coerce(-math.inf) is NEG_INF
        assert ExtReal.coerce(-math.inf).is_neg_inf

    def test_neg_inf_absorbs_addition(self):
        """NegInf plus a positive constant is NegInf."""
        assert (NEG_INF + 3.0).is_neg_inf
        assert (3.0 + NEG_INF).is_neg_inf

    def test_to_float(self):
        """Round trip through float for both variants."""
        assert NEG_INF.to_float() == -math.inf
        assert ExtReal.finite(2.5).to_float() == 2.5

    @given(finite_floats)
    @settings(max_examples=200, deadline=None)
    def test_neg_inf_below_every_finite(self, v):
        """NegInf < Finite(v) for all v."""
        assert NEG_INF < ExtReal.finite(v)
        assert ext_compare(NEG_INF, ExtReal.finite(v)) is Ordering.LESS


class TestExtCompare:
    def test_neg_inf_less(self):
        """(NegInf, Finite(-1e9)) is Less."""
        assert ext_compare(NEG_INF, ExtReal.finite(-1e9)) is Ordering.LESS

    def test_equal(self):
        """(Finite(2), Finite(2)) is Equal."""
        assert ext_compare(ExtReal.finite(2), ExtReal.finite(2)) is Ordering.EQUAL

    def test_greater(self):
        """(Finite(3), Finite(1)) is Greater."""
        assert ext_compare(ExtReal.finite(3), ExtReal.finite(1)) is Ordering.GREATER

    def test_neg_inf_equal_to_itself(self):
        """NegInf compares Equal with NegInf."""
        assert ext_compare(NEG_INF, NEG_INF) is Ordering.EQUAL

    def test_ext_le_slack(self):
        """Relative slack admits rounding noise but not real gaps."""
        x, y = ExtReal.finite(1.0 + 1e-13), ExtReal.finite(1.0)
        assert not ext_le(x, y)
        assert ext_le(x, y, slack=1e-12)
        assert not ext_le(ExtReal.finite(1.1), y, slack=1e-12)


class TestTolerance:
    def test_defaults(self):
        """Defaults are abs 1e-10, rel 0, 200 steps."""
        tol = Tolerance()
        assert (tol.abs_tol, tol.rel_tol, tol.max_bisection_steps) == (1e-10, 0.0, 200)

    def test_both_zero_rejected(self):
        """At least one tolerance must be positive."""
        with pytest.raises(ValidationError):
            Tolerance(abs_tol=0.0, rel_tol=0.0)


class TestMonotoneSupBelow:
    def test_log_inverse(self):
        """ln s <= ln 0.5 on [0, 1] gives 0.5."""
        g = lambda s: NEG_INF if s == 0 else ExtReal.finite(math.log(s))
        r = monotone_sup_below(g, ExtReal.finite(math.log(0.5)), 0.0, 1.0)
        assert abs(r - 0.5) <= 1e-10

    def test_boundary(self):
        """Whole interval in the sublevel set returns hi."""
        assert monotone_sup_below(lambda s: s, 10.0, 0.0, 10.0) == 10.0

    def test_jump(self):
        """Sup of the sublevel set sits at the jump."""
        r = monotone_sup_below(step, 1.0, 0.0, 10.0)
        assert abs(r - 1.0) <= 1e-10
        assert step(r) <= 1.0

    def test_precondition(self):
        """g(lo) above the threshold is rejected."""
        with pytest.raises(PreconditionViolated):
            monotone_sup_below(lambda s: s + 5.0, 1.0, 0.0, 10.0)

    def test_budget_exhausted_carries_bracket(self):
        """A tiny step budget raises with the best bracket."""
        tol = Tolerance(abs_tol=1e-12, max_bisection_steps=3)
        with pytest.raises(BudgetExhausted) as info:
            monotone_sup_below(lambda s: s, 0.3, 0.0, 1.0, tol)
        assert info.value.lo <= 0.3 < info.value.hi
        assert info.value.steps == 3

    def test_bracket_flag(self):
        """locate_sup_below reports exhaustion instead of raising."""
        bracket = locate_sup_below(lambda s: s, 0.3, 0.0, 1.0, Tolerance(max_bisection_steps=4))
        assert bracket.exhausted
        assert bracket.width == pytest.approx(1.0 / 16)

    @given(
        st.floats(min_value=0.0, max_value=10.0),
        st.floats(min_value=0.0, max_value=10.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_threshold(self, u, v):
        """u <= v implies sup(u) <= sup(v) + 2 abs_tol."""
        u, v = min(u, v), max(u, v)
        g = lambda s: s * s
        assert monotone_sup_below(g, u, 0.0, 5.0) <= monotone_sup_below(g, v, 0.0, 5.0) + 2e-10


class TestGeometricRatio:
    def test_geometric(self):
        """Halving terms give ratio 1/2."""
        assert geometric_ratio([2.0**-i for i in range(40)]) == pytest.approx(0.5)

    def test_harmonic_has_no_ratio(self):
        """Ratios creeping up to 1 are not geometric."""
        assert geometric_ratio([1.0 / (n + 1) for n in range(200)]) is None

    def test_short_input(self):
        """Fewer than 2 * window + 1 values give None."""
        assert geometric_ratio([1.0, 0.5, 0.25]) is None
