"""Numeric brackets and the derivative-generating field families."""

import math

import numpy as np
import pytest

from liees import costs, lie
from liees.costs import make_power_cost
from liees.errors import InvalidParameterError
from liees.lie import ScalarField, bracket2, iterated_bracket

QUARTIC = make_power_cost(1.0, 1.0, 4)
HALF_SQUARE = make_power_cost(0.5, 0.0, 2)   # J = x^2/2, J' = x, J'' = 1


class TestBracket2:
    def test_linear_against_constant_is_minus_gradient(self):
        # [J, 1] = -J'; quartic J'(0) = -4
        f = ScalarField(lambda z: z, QUARTIC)
        g = ScalarField(lambda z: 1.0, QUARTIC)
        assert bracket2(f, g, 0.0) == pytest.approx(4.0, abs=1e-8)

    def test_sin_cos_wronskian(self):
        # sin cos' - sin' cos = -1, so the bracket is -J'; J' = x for x^2/2
        f = ScalarField(math.sin, HALF_SQUARE)
        g = ScalarField(math.cos, HALF_SQUARE)
        assert bracket2(f, g, 3.0) == pytest.approx(-3.0, abs=1e-7)

    def test_self_bracket_vanishes(self):
        f = ScalarField(math.sin, QUARTIC)
        assert abs(bracket2(f, f, 0.7)) <= 1e-10

    def test_different_costs_rejected(self):
        f = ScalarField(lambda z: z, QUARTIC)
        g = ScalarField(lambda z: 1.0, HALF_SQUARE)
        with pytest.raises(InvalidParameterError):
            bracket2(f, g, 0.0)

    def test_antisymmetry(self):
        shapes = [lambda z: z, lambda z: 1.0, math.sin, math.cos, lambda z: z * z]
        for sf in shapes:
            for sg in shapes:
                f, g = ScalarField(sf, QUARTIC), ScalarField(sg, QUARTIC)
                for x in (0.2, 0.9, 1.7):
                    ab, ba = bracket2(f, g, x), bracket2(g, f, x)
                    assert abs(ab + ba) <= 1e-9 * max(abs(ab), abs(ba), 1.0)

    def test_jacobi_identity(self):
        f = ScalarField(lambda z: z, QUARTIC)
        g = ScalarField(math.sin, QUARTIC)
        h = ScalarField(math.cos, QUARTIC)
        for x in (0.3, 0.9, 1.6):
            vals = [iterated_bracket([a, b, c], (1, 2, 3), x)
                    for a, b, c in ((f, g, h), (g, h, f), (h, f, g))]
            scale = max(map(abs, vals)) or 1.0
            assert abs(sum(vals)) <= 1e-6 * scale


class TestIteratedBracket:
    def test_triple_bracket_gives_third_derivative(self):
        # [[[J,1],1],1] = -J'''; quartic at 0: -(-24) = 24
        fields = [ScalarField(lambda z: z, QUARTIC), ScalarField(lambda z: 1.0, QUARTIC)]
        assert iterated_bracket(fields, (1, 2, 2, 2), 0.0) == pytest.approx(24.0, rel=1e-5)

    def test_vanishes_on_quadratic(self):
        quad = make_power_cost(1.0, 0.0, 2)
        fields = [ScalarField(lambda z: z, quad), ScalarField(lambda z: 1.0, quad)]
        for x in (-0.5, 0.3, 1.1):
            assert abs(iterated_bracket(fields, (1, 2, 2, 2), x)) <= 1e-5

    def test_length_one_is_field_value(self):
        fields = [ScalarField(math.sin, QUARTIC)]
        assert iterated_bracket(fields, (1,), 0.5) == math.sin(QUARTIC.eval(0.5))

    def test_index_validation(self):
        fields = [ScalarField(lambda z: z, QUARTIC), ScalarField(lambda z: 1.0, QUARTIC)]
        with pytest.raises(InvalidParameterError):
            iterated_bracket(fields, (1, 2, 2, 2, 2), 0.0)
        with pytest.raises(InvalidParameterError):
            iterated_bracket(fields, (1, 3), 0.0)


class TestGeneratingPair:
    def test_gradient_case(self):
        g1, g2 = lie.make_generating_pair(2, 1.0)
        fields = [ScalarField(g1, HALF_SQUARE), ScalarField(g2, HALF_SQUARE)]
        # -c J' at x=2 with J' = x
        assert iterated_bracket(fields, (1, 2), 2.0) == pytest.approx(-2.0, abs=1e-8)

    def test_fourth_order_case(self):
        g1, g2 = lie.make_generating_pair(4, 1.0)
        fields = [ScalarField(g1, QUARTIC), ScalarField(g2, QUARTIC)]
        assert iterated_bracket(fields, (1, 2, 2, 2), 0.0) == pytest.approx(24.0, rel=1e-4)

    def test_third_order_with_gain(self):
        g1, g2 = lie.make_generating_pair(3, 2.0)
        fields = [ScalarField(g1, HALF_SQUARE), ScalarField(g2, HALF_SQUARE)]
        # -c J'' = -2 everywhere
        for x in (-1.0, 0.4, 2.0):
            assert iterated_bracket(fields, (1, 2, 2), x) == pytest.approx(-2.0, abs=1e-6)

    def test_signs_follow_oracle(self):
        # the calibrated sign is (-1)^N: positive linear shape for N=2,4
        for N, expected in ((2, 1.0), (3, -1.0), (4, 1.0)):
            g1, _ = lie.make_generating_pair(N, 1.0)
            assert math.copysign(1.0, g1(1.0)) == expected

    def test_invalid_parameters(self):
        with pytest.raises(InvalidParameterError):
            lie.make_generating_pair(5, 1.0)
        with pytest.raises(InvalidParameterError):
            lie.make_generating_pair(2, -1.0)


class TestWronskianPair:
    def test_constant_seed_gives_negative_identity(self):
        g1, g2 = lie.make_wronskian_pair(lambda z: 1.0, lambda z: 1.0)
        for z in np.linspace(-2, 2, 9):
            assert g1(z) == 1.0
            assert g2(z) == pytest.approx(-z, abs=1e-12)

    def test_sin_seed_gives_cos(self):
        # w' = -1/sin^2, base at pi/2 where cot vanishes: b = sin cot = cos
        cost = make_power_cost(1.0, 0.0, 2)
        g1, g2 = lie.make_wronskian_pair(lambda z: 1.0, math.sin,
                                         domain=(0.75, 1.7), cost=cost)
        for z in np.linspace(0.6, 2.8, 12):
            assert g2(z) == pytest.approx(math.cos(z), abs=1e-8)

    def test_linear_phi(self):
        g1, g2 = lie.make_wronskian_pair(lambda z: z, lambda z: 1.0)
        for z in np.linspace(-1.5, 1.5, 7):
            assert g2(z) == pytest.approx(-z * z / 2.0, abs=1e-10)

    def test_linear_phi_bracket_identity(self):
        # [g1 o J, g2 o J] = -J grad J, cross-checked through bracket2
        g1, g2 = lie.make_wronskian_pair(lambda z: z, lambda z: 1.0)
        f1, f2 = ScalarField(g1, HALF_SQUARE), ScalarField(g2, HALF_SQUARE)
        for x in (0.4, 1.0, 1.8):
            expected = -HALF_SQUARE.eval(x) * x
            assert bracket2(f1, f2, x) == pytest.approx(expected, rel=1e-6, abs=1e-8)

    def test_wronskian_residual(self):
        # g1 g2' - g1' g2 + phi = 0 pointwise
        cases = [
            (lambda z: 1.0, lambda z: 1.0, None, None),
            (lambda z: z, lambda z: 1.0, None, None),
            (lambda z: 1.0, math.sin, (0.75, 1.7), make_power_cost(1.0, 0.0, 2)),
        ]
        for phi, a, dom, cost in cases:
            g1, g2 = lie.make_wronskian_pair(phi, a, dom, cost)
            zs = np.linspace(0.6, 1.6, 9) if dom else np.linspace(-1.5, 1.5, 9)
            for z in zs:
                d2 = costs.fd_derivative(g2, z, 1)
                d1 = costs.fd_derivative(g1, z, 1)
                assert abs(g1(z) * d2 - d1 * g2(z) + phi(z)) <= 1e-8

    def test_vanishing_seed_rejected(self):
        with pytest.raises(InvalidParameterError):
            lie.make_wronskian_pair(lambda z: 1.0, lambda z: 0.0)


class TestTripleFamily:
    def test_constant_phi_on_half_square(self):
        g1, g2, g3 = lie.make_triple_family(lambda z: 1.0)
        fields = [ScalarField(g, HALF_SQUARE) for g in (g1, g2, g3)]
        for x in (-0.8, 0.5, 1.4):
            assert iterated_bracket(fields, (1, 2, 3), x) == pytest.approx(-1.0, abs=1e-6)

    def test_sqrt_gain(self):
        # phi2 = sqrt(c) realizes a pure gain c on J''
        g1, g2, g3 = lie.make_triple_family(lambda z: math.sqrt(2.0))
        fields = [ScalarField(g, HALF_SQUARE) for g in (g1, g2, g3)]
        assert iterated_bracket(fields, (1, 2, 3), 0.9) == pytest.approx(-2.0, abs=1e-6)

    def test_linear_phi_value(self):
        # at x=1, J=1/2: bracket = -(1/2)^2 * 1 = -0.25
        g1, g2, g3 = lie.make_triple_family(lambda z: z)
        fields = [ScalarField(g, HALF_SQUARE) for g in (g1, g2, g3)]
        assert iterated_bracket(fields, (1, 2, 3), 1.0) == pytest.approx(-0.25, abs=1e-6)

    @pytest.mark.parametrize("cost,dom", [(make_power_cost(1.0, 0.0, 2), (-1.0, 1.0)),
                                          (QUARTIC, (0.0, 2.0))])
    @pytest.mark.parametrize("phi", [lambda z: 1.0, lambda z: math.sqrt(2.0), lambda z: z])
    def test_lemma_identity_grid(self, cost, dom, phi):
        # residual measured relative to the identity's magnitude on the grid
        g1, g2, g3 = lie.make_triple_family(phi, cost=cost, domain=dom)
        fields = [ScalarField(g, cost) for g in (g1, g2, g3)]
        xs = [x for x in np.linspace(dom[0], dom[1], 50) if abs(x - cost.xstar) > 0.1]
        worst, scale = 0.0, 0.0
        for x in xs:
            val = iterated_bracket(fields, (1, 2, 3), x)
            target = -phi(cost.eval(x)) ** 2 * costs.derivative(cost, 2, x)
            worst = max(worst, abs(val - target))
            scale = max(scale, abs(target))
        assert worst <= 1e-6 * scale


class TestQuadrupleFamily:
    def test_unit_phi_on_quartic(self):
        fam = lie.make_quadruple_family(lambda z: 1.0)
        fields = [ScalarField(g, QUARTIC) for g in fam]
        assert iterated_bracket(fields, (1, 2, 3, 4), 0.0) == pytest.approx(24.0, rel=1e-3)

    def test_vanishes_on_quadratic(self):
        quad = make_power_cost(1.0, 0.0, 2)
        fam = lie.make_quadruple_family(lambda z: 1.0)
        fields = [ScalarField(g, quad) for g in fam]
        for x in (-0.7, 0.5):
            assert abs(iterated_bracket(fields, (1, 2, 3, 4), x)) <= 1e-4

    def test_constant_four_gives_sixteenfold(self):
        fam = lie.make_quadruple_family(lambda z: 4.0)
        fields = [ScalarField(g, QUARTIC) for g in fam]
        # -phi3^2 J''' = -16 * (-24) = 384 at x=0
        assert iterated_bracket(fields, (1, 2, 3, 4), 0.0) == pytest.approx(384.0, rel=1e-3)

    def test_negative_phi_rejected(self):
        with pytest.raises(InvalidParameterError):
            lie.make_quadruple_family(lambda z: -1.0)
