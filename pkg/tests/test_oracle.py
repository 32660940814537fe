import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssmm.matrix_store import from_dense, from_triples, gen_hard_instance, gen_random
from ssmm.oracle import oracle_elementary_count, oracle_multiply, triple_loop_multiply
from ssmm.semiring import BOOL, INT64, TROPICAL

from conftest import make_disk


def eye(disk, U, sr=INT64):
    return from_triples(disk, U, sr, range(U), range(U), [sr.one] * U)


def test_identity(disk):
    I = eye(disk, 16)
    p = oracle_multiply(I, I)
    assert p.Z == 16 and p.as_dict() == {(k, k): 1 for k in range(16)}
    assert oracle_elementary_count(I, I) == 16


def test_cancellation_pair(disk):
    A = from_dense(disk, [[1, 1], [0, 0]], INT64)
    C = from_dense(disk, [[1, 0], [-1, 0]], INT64)
    assert oracle_multiply(A, C).Z == 0
    assert oracle_elementary_count(A, C) >= 2


def test_elementary_count_formula(disk):
    A = from_triples(disk, 8, INT64, [0, 1, 2], [5, 5, 5], [1, 1, 1])
    C = from_triples(disk, 8, INT64, [5, 5, 5, 5], [0, 1, 2, 3], [1, 1, 1, 1])
    assert oracle_elementary_count(A, C) == 12


def test_hard_elementary(disk):
    A, C = gen_hard_instance(disk, 1024, 256)
    assert oracle_elementary_count(A, C) == 1024 * 16


def test_random_matches_triple_loop(disk):
    A = gen_random(disk, 64, 500, INT64, 1)
    C = gen_random(disk, 64, 500, INT64, 2)
    assert oracle_multiply(A, C).as_dict() == triple_loop_multiply(A, C)


@pytest.mark.parametrize("sr", [INT64, BOOL, TROPICAL], ids=lambda s: s.name)
@given(st.integers(0, 10 ** 6))
def test_join_matches_triple_loop(sr, seed):
    disk = make_disk()
    rng = np.random.default_rng(seed)
    U = int(rng.integers(1, 12))
    A = gen_random(disk, U, int(rng.integers(0, U * U + 1)), sr, seed)
    C = gen_random(disk, U, int(rng.integers(0, U * U + 1)), sr, seed + 1)
    p = oracle_multiply(A, C)
    assert p.as_dict() == triple_loop_multiply(A, C)
    assert all(not sr.is_zero(v) for v in p.as_dict().values())


def test_oracle_is_uncharged(disk):
    A = gen_random(disk, 32, 200, INT64, 1)
    oracle_multiply(A, A)
    assert disk.snapshot().total == 0


def test_oracle_rejects_mismatch(disk):
    with pytest.raises(ValueError):
        oracle_multiply(eye(disk, 4), eye(disk, 5))
