import pytest

from gqcovers.gf import MODULI, GF, _poly_is_irreducible, field, field_of_order


@pytest.mark.parametrize("p,h", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1), (7, 1)])
def test_field_axioms_exhaustive(p, h):
    # GF.__init__ runs the exhaustive axiom check for q <= 16
    f = GF(p, h)
    assert f.q == p**h


def test_larger_fields_construct():
    for q in (16, 25, 27, 49, 81):
        f = field_of_order(q)
        assert f.mul(1, 1) == 1
        for a in (1, 2, q - 1):
            assert f.mul(a, f.inv(a)) == 1


def test_moduli_table_irreducible():
    for (p, h), coeffs in MODULI.items():
        assert len(coeffs) == h + 1 and coeffs[-1] == 1
        assert _poly_is_irreducible(coeffs, p)


def test_unsupported_orders_rejected():
    with pytest.raises(ValueError):
        field(11)
    with pytest.raises(ValueError):
        field(3, 5)  # 243 > 81
    with pytest.raises(ValueError):
        field_of_order(12)


def test_frobenius_and_squares():
    f9 = field(3, 2)
    for a in f9.elements():
        assert f9.frobenius(a) == f9.power(a, 3)
        assert f9.frobenius(f9.frobenius(a)) == a
    squares = {f9.mul(a, a) for a in f9.elements()}
    assert f9.nonsquare() not in squares
    assert sum(1 for a in f9.elements() if f9.is_square(a)) == (9 - 1) // 2 + 1

    f4 = field(2, 2)
    with pytest.raises(ValueError):
        f4.nonsquare()


def test_rank():
    f = field(3)
    assert f.rank([(1, 0, 0), (0, 1, 0), (1, 1, 0)]) == 2
    assert f.rank([(1, 1, 0), (0, 1, 1), (1, 0, 1)]) == 3  # det = 2 mod 3
    assert f.rank([(0, 0, 0)]) == 0


def test_division_errors():
    f = field(5)
    with pytest.raises(ZeroDivisionError):
        f.inv(0)
