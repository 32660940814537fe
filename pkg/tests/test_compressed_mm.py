import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssmm.compressed_mm import (CmmParams, build_polysketch, cmm_multiply, direct_polysketch, draw_hashes, majority,
                                recover_and_emit)
from ssmm.hashing import hash_mod
from ssmm.iosim import blocks_for
from ssmm.matrix_store import (COLUMN_MAJOR, ROW_MAJOR, ensure_layout, from_triples, gen_cancellation_instance,
                               gen_hard_instance, gen_random)
from ssmm.oracle import oracle_multiply
from ssmm.semiring import BOOL, INT64, TROPICAL

from conftest import make_disk

M = 4096


def operands(A, C):
    return ensure_layout(A, COLUMN_MAJOR), ensure_layout(C, ROW_MAJOR)


def eye(disk, U, layout, sr=INT64):
    return from_triples(disk, U, sr, range(U), range(U), [sr.one] * U, layout=layout)


def run(A, C, seed, params=None):
    params = params or CmmParams.for_instance(A.disk.M, A.U)
    got = {}

    def emit(i, j, v):
        assert (i, j) not in got
        got[(i, j)] = v

    cmm_multiply(A, C, params, emit, seed)
    return got


def test_params_respect_half_memory():
    for m in (256, 1024, 4096, 1 << 16):
        for U in (2, 64, 1024, 1 << 16):
            p = CmmParams.for_instance(m, U)
            assert p.r >= 1 and p.reps == 3 * max(1, int(np.ceil(np.log2(U))))
            assert p.workspace <= m / 2 or p.r == 1


def test_zero_operands_give_zero_polynomials(disk):
    A = from_triples(disk, 8, INT64, [], [], [], layout=COLUMN_MAJOR)
    C = from_triples(disk, 8, INT64, [], [], [], layout=ROW_MAJOR)
    sk = build_polysketch(A, C, CmmParams.for_instance(M, 8))
    assert not sk.coeffs.any()
    assert disk.snapshot().total == 0
    assert run(A, C, 0) == {}


def test_two_by_two_identity_by_hand(disk):
    params = CmmParams(1 / 96, 1, 4, 1)
    A, C = eye(disk, 2, COLUMN_MAJOR), eye(disk, 2, ROW_MAJOR)
    hA, hC = draw_hashes(params, 5)
    sk = build_polysketch(A, C, params, 5, hashes=(hA, hC))
    # p(x) = x^(h(0) + g(0)) + x^(h(1) + g(1))
    want = [0] * 7
    for k in (0, 1):
        want[int(hash_mod(hA, [k], 4)[0, 0] + hash_mod(hC, [k], 4)[0, 0])] += 1
    assert sk.coeffs[0].tolist() == want
    assert sk.coeffs.tolist() == direct_polysketch(A, C, 4, hA, hC).tolist()


@pytest.mark.parametrize("sr", [INT64, BOOL, TROPICAL], ids=lambda s: s.name)
@given(st.integers(0, 10 ** 6))
def test_sketch_matches_direct_definition(sr, seed):
    disk = make_disk(M, 64)
    rng = np.random.default_rng(seed)
    U = int(rng.integers(1, 17))
    A = gen_random(disk, U, int(rng.integers(0, U * U + 1)), sr, seed)
    C = gen_random(disk, U, int(rng.integers(0, U * U + 1)), sr, seed + 1)
    A, C = operands(A, C)
    params = CmmParams(1 / 96, 1, int(rng.integers(1, 6)), int(rng.integers(1, 4)))
    hA, hC = draw_hashes(params, seed)
    sk = build_polysketch(A, C, params, seed, hashes=(hA, hC))
    assert sk.coeffs.tolist() == direct_polysketch(A, C, params.r, hA, hC).tolist()


def test_single_scan_example():
    disk = make_disk(M, 64)
    A = from_triples(disk, 16, INT64, np.arange(130) % 16, np.arange(130) // 16, [1] * 130, layout=COLUMN_MAJOR)
    C = from_triples(disk, 16, INT64, np.arange(70) // 16, np.arange(70) % 16, [1] * 70, layout=ROW_MAJOR)
    run(A, C, 0)
    t = disk.snapshot()
    assert (t.reads, t.writes) == (5, 0)


@given(st.integers(0, 10 ** 6), st.sampled_from([(256, 16), (1024, 16), (4096, 64)]))
def test_io_is_exactly_one_scan(seed, mb):
    disk = make_disk(*mb)
    rng = np.random.default_rng(seed)
    U = int(rng.integers(2, 64))
    A, C = operands(gen_random(disk, U, int(rng.integers(0, min(400, U * U))), INT64, seed),
                    gen_random(disk, U, int(rng.integers(0, min(400, U * U))), INT64, seed + 1))
    before = disk.snapshot()
    run(A, C, seed)
    assert (disk.snapshot() - before).total == blocks_for(A.n, disk.B) + blocks_for(C.n, disk.B)
    assert disk.budget.peak <= disk.M


def test_majority_examples():
    assert majority(["a", "a", "b"]) == "a"
    assert majority(["a", "b", "c"]) is None
    assert majority(["a", "b", "a", "b", "a"]) == "a"
    assert majority([]) is None
    assert majority(["a", "b"]) is None


@given(st.lists(st.integers(0, 3), max_size=15))
def test_majority_matches_counting(values):
    m = majority(values)
    counts = {v: values.count(v) for v in values}
    strict = [v for v, c in counts.items() if 2 * c > len(values)]
    assert m == (strict[0] if strict else None)


def test_identity_emits_the_diagonal():
    # 32 outputs need a roomier memory to stay under the bound
    disk = make_disk(1 << 16, 64)
    A, C = eye(disk, 32, COLUMN_MAJOR), eye(disk, 32, ROW_MAJOR)
    for seed in range(5):
        assert run(A, C, seed) == {(k, k): 1 for k in range(32)}


def test_recover_with_no_candidates(disk):
    A, C = eye(disk, 4, COLUMN_MAJOR), eye(disk, 4, ROW_MAJOR)
    sk = build_polysketch(A, C, CmmParams.for_instance(M, 4))
    assert recover_and_emit(sk, [], [0, 1], lambda *a: None) == 0


def test_full_cancellation_emits_nothing(disk):
    A, C, Z = gen_cancellation_instance(disk, 32, 4, 1, full=True)
    A, C = operands(A, C)
    assert Z == 0
    for seed in range(20):
        assert run(A, C, seed) == {}


def bounded_instances(lo, hi, count, nnz):
    """Random U=64 subproblems whose output size lies in [lo, hi)."""
    seed = 0
    while count:
        disk = make_disk(M, 64)
        A, C = operands(gen_random(disk, 64, nnz, INT64, seed), gen_random(disk, 64, nnz, INT64, seed + 10 ** 6))
        p = oracle_multiply(A, C)
        if lo <= p.Z < hi:
            count -= 1
            yield seed, A, C, p.as_dict()
        seed += 1


def bound():
    return M * CmmParams.for_instance(M, 64).gamma / 6


def test_within_bound_is_exact():
    good = sum(run(A, C, s) == want for s, A, C, want in bounded_instances(1, bound(), 100, 20))
    assert good >= 99


def test_hard_subproblem_within_bound():
    disk = make_disk(M, 64)
    A, C = operands(*gen_hard_instance(disk, 128, 4))
    assert A.U == 64
    want = oracle_multiply(A, C).as_dict()
    assert sum(run(A, C, s) == want for s in range(100)) >= 99


def test_oversized_output_fails_more_often():
    inside = sum(run(A, C, s) != want for s, A, C, want in bounded_instances(1, bound(), 100, 20))
    outside = sum(run(A, C, s) != want for s, A, C, want in bounded_instances(2 * bound(), 3 * bound(), 100, 28))
    assert outside > inside
