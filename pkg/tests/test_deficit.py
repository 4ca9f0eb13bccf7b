"""Deficit curves: closed forms, quadrature, and empirical agreement."""

import math

import numpy as np
import pytest

from maxdeficit import (
    DeficitFunctional,
    DomainError,
    identity,
    line_from_ruin_constants,
    proportional_hazard,
    ruin_constants,
    tvar,
    ultimate_ruin,
    var_step,
)
from tests.conftest import LINE1


def psi1(v):
    return ultimate_ruin(LINE1, v)


class TestClosedFormPh:
    def test_undistorted_level(self):
        d = DeficitFunctional.closed_form_ph(LINE1)
        assert d(0.0) == pytest.approx(5.0, abs=1e-12)
        assert d(2.78) == pytest.approx(3.1459143496, abs=1e-9)

    def test_distorted_level(self):
        d = DeficitFunctional.closed_form_ph(LINE1, p=0.5)
        assert d(0.0) == pytest.approx(10.9544511501, abs=1e-9)
        assert d(3.7) == pytest.approx(8.0479108665, abs=1e-9)

    def test_negative_reserve_is_linear_extension(self):
        d = DeficitFunctional.closed_form_ph(LINE1, p=0.5)
        assert d(-4.0) == pytest.approx(d(0.0) + 4.0, rel=1e-14)

    def test_decreasing_and_convex(self):
        d = DeficitFunctional.closed_form_ph(LINE1, p=0.7)
        grid = np.linspace(-2.0, 40.0, 64)
        vals = [d(u) for u in grid]
        assert all(x > y for x, y in zip(vals, vals[1:]))
        mid = [(vals[i - 1] + vals[i + 1]) / 2 for i in range(1, len(vals) - 1)]
        assert all(m >= v - 1e-12 for m, v in zip(mid, vals[1:-1]))

    def test_rejects_bad_exponent(self):
        for p in (0.0, -0.5, 1.5):
            with pytest.raises(DomainError):
                DeficitFunctional.closed_form_ph(LINE1, p=p)

    def test_rejects_finite_horizon(self):
        with pytest.raises(DomainError):
            DeficitFunctional.closed_form_ph(LINE1, horizon=50.0)

    def test_introspection(self):
        d = DeficitFunctional.closed_form_ph(LINE1, p=0.5)
        a, b = d.constants
        assert (a, b) == pytest.approx((5.0 / 6.0, 1.0 / 6.0))
        assert d.ph_exponent == 0.5
        with pytest.raises(DomainError):
            d.tvar_level


class TestClosedFormTvar:
    def test_level_and_kink(self):
        d = DeficitFunctional.closed_form_tvar(LINE1, 0.01)
        assert d.plateau_edge == pytest.approx(26.5370917752, abs=1e-9)
        assert d(0.0) == pytest.approx(32.5370917752, abs=1e-9)

    def test_linear_left_of_kink(self):
        d = DeficitFunctional.closed_form_tvar(LINE1, 0.01)
        v = d.plateau_edge
        # unit slope: the distorted tail is flat at 1 on the plateau
        assert d(v - 10.0) - d(v - 3.0) == pytest.approx(7.0, rel=1e-12)

    def test_exponential_right_of_kink(self):
        d = DeficitFunctional.closed_form_tvar(LINE1, 0.01)
        v = d.plateau_edge
        assert d(v + 6.0) / d(v) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_continuity_at_kink(self):
        for d, level in (
            (DeficitFunctional.closed_form_tvar(LINE1, 0.01), 6.0),
            (
                DeficitFunctional.closed_form_tvar(
                    line_from_ruin_constants(0.95, 0.05), 0.05
                ),
                20.0,
            ),
        ):
            match = d.continuity_match()
            assert match.two_branch
            assert match.left == pytest.approx(level, rel=1e-12)
            assert match.right == pytest.approx(level, rel=1e-12)
            assert d(match.v_alpha) == pytest.approx(level, rel=1e-12)

    def test_plateau_already_gone(self):
        # alpha above a: the plateau ends at negative reserve, one branch
        d = DeficitFunctional.closed_form_tvar(LINE1, 0.9)
        match = d.continuity_match()
        assert not match.two_branch
        assert match.v_alpha < 0.0
        assert match.left == match.right == pytest.approx(d(0.0), rel=1e-12)
        assert d(-2.0) == pytest.approx(d(0.0) + 2.0, rel=1e-12)

    def test_negative_reserve_is_linear_extension(self):
        d = DeficitFunctional.closed_form_tvar(LINE1, 0.01)
        assert d(-5.0) == pytest.approx(d(0.0) + 5.0, rel=1e-12)

    def test_rejects_zero_frequency_line(self):
        with pytest.raises(DomainError):
            DeficitFunctional.closed_form_tvar(
                line_from_ruin_constants(0.0, 0.2), 0.05
            )


class TestQuadrature:
    def test_matches_ph_closed_form(self):
        g = proportional_hazard(0.5)
        closed = DeficitFunctional.closed_form_ph(LINE1, p=0.5)
        quad = DeficitFunctional.quadrature(g, psi1)
        for u in (0.0, 1.0, 7.3, 25.0):
            assert quad(u) == pytest.approx(closed(u), rel=1e-7)

    def test_matches_tvar_closed_form(self):
        g = tvar(0.05)
        closed = DeficitFunctional.closed_form_tvar(LINE1, 0.05)
        quad = DeficitFunctional.quadrature(g, psi1)
        for u in (0.0, closed.plateau_edge, 30.0):
            assert quad(u) == pytest.approx(closed(u), rel=1e-6)

    def test_step_distortion_integrates_to_plateau(self):
        # g = 1{x > alpha} makes D(0) exactly the plateau width
        quad = DeficitFunctional.quadrature(var_step(0.01), psi1)
        assert quad(0.0) == pytest.approx(26.5370917752, abs=1e-6)

    def test_negative_reserve_is_linear_extension(self):
        quad = DeficitFunctional.quadrature(identity(), psi1)
        assert quad(-3.0) == pytest.approx(quad(0.0) + 3.0, rel=1e-9)

    def test_rejects_nonpositive_horizon(self):
        with pytest.raises(DomainError):
            DeficitFunctional.quadrature(identity(), psi1, horizon=0.0)


class TestEmpirical:
    def test_translation_identity_is_exact(self, rng):
        # weights sum to one, so the u < 0 extension needs no special case
        d = DeficitFunctional.empirical(
            proportional_hazard(0.5), rng.exponential(4.0, size=200)
        )
        assert d(-7.0) == pytest.approx(d(0.0) + 7.0, rel=1e-12)

    def test_identity_weights_give_mean_shortfall(self, rng):
        x = rng.exponential(4.0, size=500)
        d = DeficitFunctional.empirical(identity(), x)
        for u in (0.0, 2.0, 9.0):
            assert d(u) == pytest.approx(np.maximum(x - u, 0.0).mean(), rel=1e-12)

    def test_approaches_closed_form(self, rng):
        # exponential-tail maxima sampled directly from the ruin curve:
        # M > 0 with probability a, and conditionally Exp(b)
        a, b = 5.0 / 6.0, 1.0 / 6.0
        n = 200_000
        hits = rng.random(n) < a
        maxima = np.where(hits, rng.exponential(1.0 / b, size=n), 0.0)
        d = DeficitFunctional.empirical(identity(), maxima)
        closed = DeficitFunctional.closed_form_ph(LINE1)
        for u in (0.0, 5.0):
            assert d(u) == pytest.approx(closed(u), rel=0.02)

    def test_input_validation(self):
        with pytest.raises(DomainError):
            DeficitFunctional.empirical(identity(), [])
        with pytest.raises(DomainError):
            DeficitFunctional.empirical(identity(), [1.0, -2.0])
        with pytest.raises(DomainError):
            DeficitFunctional.empirical(identity(), [[1.0], [2.0]])


class TestSourceTags:
    def test_kinds_distinguish_construction(self, rng):
        closed = DeficitFunctional.closed_form_ph(LINE1)
        quad = DeficitFunctional.quadrature(identity(), psi1)
        emp = DeficitFunctional.empirical(identity(), rng.exponential(1.0, 50))
        assert len({closed.kind, quad.kind, emp.kind}) == 3
        with pytest.raises(DomainError):
            quad.constants
