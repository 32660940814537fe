import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssmm.semiring import BOOL, INT64, TROPICAL, TROPICAL_INF, generic_copy, get_semiring, nat_scale, wrap64

ints = st.integers(-(1 << 40), 1 << 40)
trops = st.one_of(st.integers(0, 1 << 40), st.just(TROPICAL_INF))
bools = st.booleans()

ELEMENTS = [(INT64, ints), (BOOL, bools), (TROPICAL, trops)]


def test_examples():
    assert INT64.add(2, -2) == 0
    assert BOOL.add(True, False) is True
    assert TROPICAL.add(3, 5) == 3
    assert INT64.mul(3, 4) == 12
    assert BOOL.mul(True, True) is True
    assert TROPICAL.mul(3, 5) == 8


def test_nat_scale_examples():
    assert nat_scale(INT64, 1, 7) == 7
    assert nat_scale(INT64, 3, 2) == 6
    assert nat_scale(BOOL, 5, True) is True
    assert nat_scale(TROPICAL, 9, 4) == 4


def test_nat_scale_rejects_zero():
    with pytest.raises(ValueError):
        nat_scale(INT64, 0, 1)


def test_wraparound():
    assert wrap64(1 << 63) == -(1 << 63)
    assert INT64.mul(1 << 62, 4) == 0
    assert INT64.add((1 << 63) - 1, 1) == -(1 << 63)


def test_tropical_infinity_absorbs():
    assert TROPICAL.mul(TROPICAL_INF, 5) == TROPICAL_INF
    assert TROPICAL.add(TROPICAL_INF, 5) == 5


def test_lookup():
    assert get_semiring("bool") is BOOL
    with pytest.raises(ValueError):
        get_semiring("float")


def test_parse_format_roundtrip():
    for sr, lit in [(INT64, "-17"), (BOOL, "1"), (TROPICAL, "42")]:
        assert sr.format(sr.parse(lit)) == lit
    with pytest.raises(ValueError):
        BOOL.parse("2")
    with pytest.raises(ValueError):
        INT64.parse(str(1 << 63))


def test_generic_copy_has_no_kernel_tag():
    g = generic_copy(TROPICAL)
    assert g.kind is None and g.add(3, 5) == 3


@pytest.mark.parametrize("sr,elem", ELEMENTS, ids=lambda x: getattr(x, "name", ""))
def test_axioms(sr, elem):
    @given(elem, elem, elem)
    def check(a, b, c):
        eq = sr.eq
        assert eq(sr.add(a, b), sr.add(b, a))
        assert eq(sr.add(sr.add(a, b), c), sr.add(a, sr.add(b, c)))
        assert eq(sr.mul(sr.mul(a, b), c), sr.mul(a, sr.mul(b, c)))
        assert eq(sr.add(a, sr.zero), a)
        assert eq(sr.mul(a, sr.one), a)
        assert eq(sr.mul(sr.one, a), a)
        assert eq(sr.mul(a, sr.zero), sr.zero)
        assert eq(sr.mul(a, sr.add(b, c)), sr.add(sr.mul(a, b), sr.mul(a, c)))
        assert eq(sr.mul(sr.add(a, b), c), sr.add(sr.mul(a, c), sr.mul(b, c)))

    check()


@given(st.integers(1, 200), ints)
def test_nat_scale_matches_repeated_addition(n, a):
    acc = a
    for _ in range(n - 1):
        acc = INT64.add(acc, a)
    assert nat_scale(INT64, n, a) == acc
