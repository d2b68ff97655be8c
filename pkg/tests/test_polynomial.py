import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from sdfstab.polynomial import (DimensionMismatch, PolyField, PolyScalar, apply_to_scalar,
                                eval_field, iterated_apply, iterated_poly, lie_bracket)

from conftest import random_field, random_scalar

x1, x2 = PolyScalar.variables(2)
ZERO = PolyScalar.zero(2)
ONE = PolyScalar.constant(2, 1.0)
F3 = PolyField([-x1 * x2 ** 2, ZERO])
F2 = PolyField([x1 * x2, ZERO])
G = PolyField([ZERO, ONE])
V = x1 ** 2 + x2 ** 2


def test_eval_field_examples():
    np.testing.assert_allclose(eval_field(F3, (2, 1)), (-2, 0))
    np.testing.assert_allclose(eval_field(G, (7, -3)), (0, 1))
    np.testing.assert_allclose(PolyField.linear([[0, 1], [0, 0]])((3, 4)), (4, 0))


def test_eval_field_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        eval_field(F3, (1, 2, 3))


def test_apply_to_scalar_examples():
    gv = apply_to_scalar(G, V)
    assert gv == 2 * x2
    assert gv((1, 2)) == 4.0
    fv = apply_to_scalar(F3, V)
    assert fv == -2 * x1 ** 2 * x2 ** 2
    assert fv((1, 1)) == -2.0
    assert fv((5, 0)) == 0.0


def test_lie_bracket_examples():
    assert lie_bracket(F3, F3).is_zero()
    br = lie_bracket(F2, G)
    assert br == PolyField([-x1, ZERO])
    np.testing.assert_allclose(br((1, 0)), (-1, 0))
    A, B = [[0, 1], [0, 0]], [[0, 0], [1, 0]]
    comm = lie_bracket(PolyField.linear(A), PolyField.linear(B))
    expected = np.array(B) @ np.array(A) - np.array(A) @ np.array(B)
    assert comm == PolyField.linear(expected)
    np.testing.assert_allclose(comm((1, 1)), (-1, 1))


def test_iterated_apply_examples():
    assert iterated_apply([], V, (1, 2)) == 5.0
    assert iterated_apply([G, G], V, (3, -4)) == 2.0
    assert iterated_apply([F2, F2], V, (1, 1)) == 4.0
    assert iterated_poly([F2, F2], V) == 4 * x1 ** 2 * x2 ** 2


def test_iterated_order_rightmost_first():
    # G(F2 V) differs from F2(G V): G(2x1^2 x2) = 2x1^2 versus F2(2x2) = 0
    assert iterated_poly([G, F2], V) == 2 * x1 ** 2
    assert iterated_poly([F2, G], V).is_zero()


def test_pruning_and_canonical_order():
    p = PolyScalar(2, {(1, 0): 1.0, (0, 1): 5e-13, (2, 0): 0.0})
    assert p.terms == {(1, 0): 1.0}
    assert (x1 + x2) ** 2 == x1 ** 2 + 2 * x1 * x2 + x2 ** 2
    assert hash(x1 * x2) == hash(x2 * x1)


def test_negative_power_rejected():
    with pytest.raises(ValueError):
        x1 ** -1


def test_array_evaluation_matches_pointwise(rng):
    p = random_scalar(rng, 3)
    pts = rng.uniform(-2, 2, size=(3, 50))
    np.testing.assert_allclose(p(pts), [p(tuple(c)) for c in pts.T], rtol=1e-12, atol=1e-12)


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a)), np.max(np.abs(b))))


def test_bracket_identities_random(rng):
    for _ in range(100):
        dim = int(rng.integers(2, 4))
        X, Y, Z = (random_field(rng, dim) for _ in range(3))
        W = random_scalar(rng, dim)
        xy, yx = lie_bracket(X, Y), lie_bracket(Y, X)
        jac = lie_bracket(lie_bracket(X, Y), Z) + lie_bracket(lie_bracket(Y, Z), X) \
            + lie_bracket(lie_bracket(Z, X), Y)
        deriv_lhs = apply_to_scalar(xy, W)
        deriv_rhs = apply_to_scalar(X, apply_to_scalar(Y, W)) - apply_to_scalar(Y, apply_to_scalar(X, W))
        for p in rng.uniform(-2, 2, size=(10, dim)):
            assert _rel(xy(p), -yx(p)) <= 1e-9
            assert _rel(jac(p), np.zeros(dim)) <= 1e-9
            assert _rel(deriv_lhs(p), deriv_rhs(p)) <= 1e-9
        assert (deriv_lhs - deriv_rhs).terms == {}


def test_apply_to_scalar_finite_difference(rng):
    for _ in range(20):
        dim = 2
        X, W = random_field(rng, dim), random_scalar(rng, dim)
        p = rng.uniform(-1, 1, size=dim)
        d = np.asarray(X(p))

        def cd(h):
            return (W(p + h * d) - W(p - h * d)) / (2 * h)

        h = 1e-3
        rich = (4 * cd(h / 2) - cd(h)) / 3
        exact = apply_to_scalar(X, W)(p)
        assert abs(rich - exact) <= 1e-6 * max(1.0, abs(exact))


def test_jacobian_matches_finite_differences(rng):
    X = random_field(rng, 3)
    p = rng.uniform(-1, 1, 3)
    J = np.array([[c(p) for c in row] for row in X.jacobian()])
    h = 1e-6
    fd = np.column_stack([(X(p + h * e) - X(p - h * e)) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(J, fd, atol=1e-6)


coeff = st.floats(-5, 5, allow_nan=False).filter(lambda c: abs(c) > 1e-6)
term = st.tuples(st.tuples(st.integers(0, 3), st.integers(0, 3)), coeff)


@settings(max_examples=60, deadline=None)
@given(st.lists(term, max_size=6), st.lists(term, max_size=6))
@example([((0, 0), 1.0), ((0, 1), 2.9375), ((1, 1), 1.875)],
         [((0, 0), 1.2908564544349161), ((1, 0), 2.5771321221711077), ((1, 1), 1.0)])
def test_ring_laws(ta, tb):
    a, b = PolyScalar(2, dict(ta)), PolyScalar(2, dict(tb))
    assert a + b == b + a
    assert a * b == b * a
    assert (a - a).is_zero()
    p = (0.3, -0.7)
    assert abs((a * b)(p) - a(p) * b(p)) <= 1e-9 * max(1.0, abs(a(p) * b(p)))


@settings(max_examples=60, deadline=None)
@given(st.lists(term, max_size=6))
def test_to_expr_round_trip(terms):
    from sdfstab.parser import parse_system_spec
    a = PolyScalar(2, dict(terms))
    quad = x1 ** 2 + x2 ** 2
    text = f"dim=2; f=[0,0]; g=[0,1]; V={(quad + a * x1 * x1).to_expr()}"
    assert parse_system_spec(text).V == quad + a * x1 * x1
