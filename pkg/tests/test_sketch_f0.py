import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssmm import _calibration
from ssmm.iosim import sort_cost
from ssmm.matrix_store import from_triples, gen_cancellation_instance, gen_hard_instance, gen_random, transpose
from ssmm.oracle import oracle_multiply
from ssmm.semiring import BOOL, INT64, TROPICAL
from ssmm.sketch_f0 import (ABOVE, BELOW, DistinguisherSketch, LadderSketch, estimate_columns, estimate_rows,
                            estimate_total, ladder, rows_needed, sketch_product, tau)

from conftest import make_disk


def eye(disk, U, sr=INT64):
    return from_triples(disk, U, sr, range(U), range(U), [sr.one] * U)


def col_counts(A, C):
    p = oracle_multiply(A, C)
    out = np.zeros(A.U, np.int64)
    for (_, j) in p.as_dict():
        out[j] += 1
    return out


def test_parameter_helpers():
    assert rows_needed(0.5, 0.1, d_const=4) == math.ceil(16 * math.log(10))
    assert rows_needed(1.0, 1.0) == 1
    lad = ladder(0.25, 128)
    assert lad[0] == 1 and lad[-1] >= 128 and lad[-2] < 128
    assert np.allclose(lad[1:] / lad[:-1], 1.25)
    assert list(ladder(0.5, 1)) == [1.0]
    with pytest.raises(ValueError):
        LadderSketch.create(0, 0.1, 8, 0)
    with pytest.raises(ValueError):
        LadderSketch.create(0.5, 0, 8, 0)


def test_tau_sits_between_the_two_hypotheses():
    eps = 0.25
    for T in (4.0, 16.0, 64.0, 256.0):
        q = 1 / T
        lo = 1 - (1 - q) ** ((1 - eps) * T)
        hi = 1 - (1 - q) ** ((1 + eps) * T)
        assert lo < tau(T, eps) < hi
    assert tau(1.0, eps) == 1.0


def test_calibration_constants_are_sane():
    assert 0 < _calibration.KAPPA < 1
    assert _calibration.D_CONST >= 1


def test_selection_rate_and_determinism():
    lad = LadderSketch.create(0.5, 0.1, 1 << 12, seed=7, d=64)
    x = np.arange(1 << 12)
    for m in (0, 3, 6):
        sk = lad.at(m)
        rate = sk.selection(x).mean()
        assert abs(rate - sk.rate) < 0.1 * sk.rate + 0.01
    again = LadderSketch.create(0.5, 0.1, 1 << 12, seed=7, d=64)
    assert np.array_equal(lad.buckets(x), again.buckets(x))
    assert np.array_equal(lad.coefficients(x), again.coefficients(x))


def test_rate_zero_selects_nothing():
    lad = LadderSketch.create(0.5, 0.1, 16, seed=1, d=1)
    sk = DistinguisherSketch(math.inf, lad.L, lad)
    assert not sk.sketch_vector({i: 1 for i in range(16)}, INT64).any()


@pytest.mark.parametrize("sr", [INT64, TROPICAL], ids=lambda s: s.name)
@given(st.integers(0, 10 ** 6))
def test_sketch_vector_is_linear(sr, seed):
    rng = np.random.default_rng(seed)
    lad = LadderSketch.create(0.5, 0.1, 64, seed, d=6)
    sk = lad.at(int(rng.integers(0, lad.L)))
    f = {int(k): int(v) for k, v in zip(rng.integers(0, 64, 10), rng.integers(1, 50, 10))}
    g = {int(k): int(v) for k, v in zip(rng.integers(0, 64, 10), rng.integers(1, 50, 10))}
    fg = dict(f)
    for k, v in g.items():
        fg[k] = sr.add(fg[k], v) if k in fg else v
    a, b, ab = sk.sketch_vector(f, sr), sk.sketch_vector(g, sr), sk.sketch_vector(fg, sr)
    assert [sr.add(x, y) for x, y in zip(a, b)] == list(ab)


def test_all_zero_cells_say_below():
    lad = LadderSketch.create(0.5, 0.1, 64, 0, d=8)
    assert lad.at(2).distinguish([0] * 8, INT64) == BELOW


def distinguisher_trials(F0_factor):
    T_step = 6
    hits = 0
    for seed in range(100):
        lad = LadderSketch.create(0.5, 0.1, 1 << 16, seed, d=rows_needed(0.5, 0.1))
        sk = lad.at(T_step)
        F0 = max(1, int(round(sk.T * F0_factor)))
        keys = np.random.default_rng(seed).choice(1 << 16, F0, replace=False)
        f = {int(k): 1 for k in keys}
        hits += sk.distinguish(sk.sketch_vector(f, INT64), INT64) == ABOVE
    return hits


def test_distinguisher_far_above():
    assert distinguisher_trials(8) >= 95


def test_distinguisher_far_below():
    assert distinguisher_trials(1 / 8) <= 5


def test_product_sketch_of_identity_matches_unit_vectors(disk):
    I = eye(disk, 16)
    table, lad = sketch_product(I, I, 0.5, 0.1, seed=3, d=8)
    for k in range(16):
        for m in range(lad.L):
            assert list(table[k, :, m]) == list(lad.at(m).sketch_vector({k: 1}, INT64))


def test_product_sketch_of_general_product(disk):
    A = gen_random(disk, 24, 80, INT64, 1)
    C = gen_random(disk, 24, 80, INT64, 2)
    p = oracle_multiply(A, C).as_dict()
    table, lad = sketch_product(A, C, 0.5, 0.1, seed=5, d=4)
    for j in (0, 7, 23):
        col = {i: v for (i, jj), v in p.items() if jj == j}
        for m in (0, lad.L - 1):
            assert list(table[j, :, m]) == list(lad.at(m).sketch_vector(col, INT64))


def test_zero_matrix_sketch(disk):
    Z = from_triples(disk, 16, INT64, [], [], [])
    table, _ = sketch_product(Z, eye(disk, 16), 0.5, 0.1, seed=0, d=4)
    assert not table.any()
    assert estimate_total(Z, Z, 0.5, 0.1, 0) == 0


def test_identity_estimates(disk):
    I = eye(disk, 64)
    for seed in range(5):
        for est in (estimate_columns(I, I, 0.25, 0.1, seed), estimate_rows(I, I, 0.25, 0.1, seed)):
            assert np.all((est.z_hat >= 0.75) & (est.z_hat <= 1.25))


def test_full_cancellation_estimates_zero(disk):
    A, C, Z = gen_cancellation_instance(disk, 64, 32, 3, full=True)
    assert Z == 0
    for seed in range(10):
        assert not estimate_columns(A, C, 0.25, 0.1, seed).z_hat.any()
        assert not estimate_rows(A, C, 0.25, 0.1, seed).z_hat.any()


def test_cancelling_cell_stress():
    # two indices with +1 and -1: a cell holding both cancels only if the coefficients collide
    zeros = 0
    for seed in range(200):
        lad = LadderSketch.create(0.5, 0.1, 1 << 20, seed, d=16)
        sk = lad.at(0)
        cells = sk.sketch_vector({3 * seed + 1: 1, 3 * seed + 2: -1}, INT64)
        zeros += int(np.sum(cells == 0))
    assert zeros <= 2 * 200 * 16 / lad.p + 1e-9


def test_random_columns_within_band(disk):
    A = gen_random(disk, 128, 1000, INT64, 11)
    C = gen_random(disk, 128, 1000, INT64, 12)
    truth = col_counts(A, C)
    good = 0
    for seed in range(100):
        z = estimate_columns(A, C, 0.25, 0.1, seed).z_hat
        good += bool(np.all(np.abs(z - truth) <= 0.25 * truth))
    assert good >= 90


def test_rows_match_columns_on_symmetric_instance(disk):
    A = gen_random(disk, 64, 400, INT64, 4)
    At = transpose(A)
    # (A A^T) is symmetric so its row and column counts agree
    rows = estimate_rows(A, At, 0.25, 0.1, 0).z_hat
    cols = estimate_columns(A, At, 0.25, 0.1, 0).z_hat
    truth = col_counts(A, At)
    assert np.all(np.abs(rows - truth) <= 0.25 * truth)
    assert np.all(np.abs(cols - truth) <= 0.25 * truth)


def test_hard_rows_are_sqrt_z(disk):
    A, C = gen_hard_instance(disk, 1024, 256)
    z = estimate_rows(A, C, 0.25, 0.1, 0).z_hat
    populated = z[:16]
    assert np.all(np.abs(populated - 16) <= 4) and not z[16:].any()


def test_hard_total_band(disk):
    A, C = gen_hard_instance(disk, 1024, 256)
    good = sum(192 <= estimate_total(A, C, 0.25, 0.1, s) <= 320 for s in range(100))
    assert good >= 90


def test_boolean_total_band(disk):
    A = gen_random(disk, 128, 800, BOOL, 1)
    C = gen_random(disk, 128, 800, BOOL, 2)
    Z = oracle_multiply(A, C).Z
    good = sum(abs(estimate_total(A, C, 0.25, 0.1, s) - Z) <= 0.25 * Z for s in range(100))
    assert good >= 90


C2 = 4.0


@pytest.mark.parametrize("M,B,U,nnz", [(4096, 64, 128, 2000), (4096, 64, 256, 3000), (1024, 16, 64, 1500),
                                        (1024, 16, 128, 2000)])
@pytest.mark.parametrize("eps", [0.25, 0.5])
def test_io_bound_when_the_batch_is_wide(M, B, U, nnz, eps):
    # the row count carries a log(U/delta) factor that only a wide pinned batch absorbs
    disk = make_disk(M, B)
    assert 2 * U * math.log(U / 0.1) <= 2 * M
    A = gen_random(disk, U, nnz, INT64, 1)
    C = gen_random(disk, U, nnz, INT64, 2)
    estimate_columns(A, C, eps, 0.1, 0)
    bound = C2 * eps ** -3 * sort_cost(2 * nnz, M, B) * math.log2(U)
    assert disk.snapshot().total <= bound
    assert disk.budget.peak <= M
