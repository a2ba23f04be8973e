from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from metricslab.expressions import Const, Coord, ExpressionError, Pow, coords, exp, from_json

z1, z2 = coords(2)
SAMPLES = [
    z1 * z2 + 3,
    exp(z1 - 2 * z2),
    1 / (2 - z1),
    (1 + z1 * z1) ** Fraction(1, 3),
    -z2 + exp(z1) * (z1 - z2) ** 2,
]


@pytest.mark.parametrize("expr", SAMPLES)
def test_json_roundtrip(expr):
    z = np.array([[0.3 + 0.1j, -0.2 + 0.4j], [1.1, 0.5j]])
    back = from_json(expr.to_json())
    np.testing.assert_array_equal(back(z), expr(z))
    assert back.to_json() == expr.to_json()


@pytest.mark.parametrize("expr", SAMPLES)
def test_gradient_matches_complex_difference(expr):
    z = np.array([0.3 + 0.1j, -0.2 + 0.4j])
    h = 1e-6
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (expr(z + e) - expr(z - e)) / (2 * h)
        assert expr.gradient(z)[j] == pytest.approx(fd, rel=1e-7, abs=1e-9)


@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_holomorphic_derivative_is_direction_independent(a, b):
    expr = exp(z1) * z2 + z1**3
    z = np.array([a, b])
    h = 1e-6
    along_re = (expr(z + [h, 0]) - expr(z - [h, 0])) / (2 * h)
    along_im = (expr(z + [1j * h, 0]) - expr(z - [1j * h, 0])) / (2j * h)
    scale = 1 + abs(along_re)
    assert abs(along_re - along_im) <= 1e-5 * scale


def test_substitute():
    e = z1 * z2 + z2
    s = e.substitute({1: Const(2.0)})
    z = np.array([0.5 + 0.5j, 9.0])
    assert s(z) == pytest.approx(2 * (0.5 + 0.5j) + 2)
    assert e.substitute({})(z) == e(z)


def test_principal_root_of_zero():
    r = Pow(Coord(0), Fraction(1, 2))
    assert r(np.array([0j])) == 0
    assert r(np.array([-4 + 0j])) == pytest.approx(2j)


@pytest.mark.parametrize("doc,where", [
    ([], "$"),
    ({"op": "nope"}, "$.op"),
    ({"op": "add", "args": [{"op": "coord", "index": -1}]}, "$.args[0].index"),
    ({"op": "pow", "args": [{"op": "coord", "index": 0}], "exp": 0.5}, "$.exp"),
    ({"op": "exp", "args": [{"op": "coord", "index": 0}, {"op": "coord", "index": 1}]}, "$.args"),
    ({"op": "const", "re": 1, "colour": 2}, "$"),
])
def test_json_errors_name_location(doc, where):
    with pytest.raises(ExpressionError) as err:
        from_json(doc)
    assert str(err.value).startswith(where + ":") or str(err.value).startswith(where)


def test_coordinate_out_of_range():
    with pytest.raises(ExpressionError, match="out of range"):
        Coord(3)(np.zeros(2))
