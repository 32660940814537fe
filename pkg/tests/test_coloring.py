import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssmm.coloring import (ABSENT, REMOVED, choose_color_count, color, color_eps, recursion_depth, split_once,
                           split_scopes, subproblem_bound)
from ssmm.config import GAMMA
from ssmm.driver import EmitSink
from ssmm.matrix_store import (COLUMN_MAJOR, ROW_MAJOR, ensure_layout, from_triples, gen_hard_instance, gen_random)
from ssmm.oracle import oracle_multiply
from ssmm.semiring import INT64
from ssmm.sketch_f0 import estimate_rows

from conftest import make_disk


def prepare(A, C):
    A, C = ensure_layout(A, COLUMN_MAJOR), ensure_layout(C, ROW_MAJOR)
    eps = color_eps(A.U)
    est = estimate_rows(A, C, eps, 1 / A.U, 0, labels=(1,))
    return A, C, est


def run_color(A, C, seed=0):
    A, C, est = prepare(A, C)
    sink = EmitSink(A.semiring)
    plan, subs = color(A, C, est.Z_hat, est.z_hat, sink, seed)
    return plan, subs, sink


def test_color_count_examples():
    M, U = 4096, 128
    b = GAMMA * M / math.log2(U)
    assert choose_color_count(0, M, U) == 1
    assert choose_color_count(b, M, U) == 1
    assert choose_color_count(4 * b, M, U) == 2
    # sqrt(10^6 * 10 * 96 / 2^16) = 121.03
    assert choose_color_count(10 ** 6, 1 << 16, 1 << 10, 1 / 96) == 122
    with pytest.raises(ValueError):
        choose_color_count(-1, M, U)


def test_depth_and_bound():
    assert recursion_depth(1) == 0
    assert recursion_depth(4) == 4
    assert recursion_depth(5) == 5
    assert subproblem_bound(4096, 128) == pytest.approx(4096 / 96 / 7)


def test_split_two_equal_rows():
    p1, p2, rem = split_once(np.array([3, 7]), np.ones(8))
    assert p1.tolist() == [3] and p2.tolist() == [7] and rem is None


def test_split_removes_a_heavy_row():
    z = np.array([10.0, 0, 0, 0])
    p1, p2, rem = split_once(np.arange(4), z)
    assert rem == 0 and p1.size == 0 and p2.tolist() == [1, 2, 3]


def test_split_of_nothing():
    p1, p2, rem = split_once(np.arange(5), np.zeros(5))
    assert p1.tolist() == list(range(5)) and p2.size == 0 and rem is None


@given(st.lists(st.floats(0, 100), min_size=3, max_size=40))
def test_split_is_balanced(zs):
    z = np.array(zs)
    scope = np.arange(len(z))
    p1, p2, rem = split_once(scope, z)
    assert sorted([*p1, *p2, *([rem] if rem is not None else [])]) == list(scope)
    half = z.sum() / 2
    assert z[p1].sum() < half or z.sum() == 0
    assert z[p2].sum() <= half + 1e-9


def test_uniform_hard_rows_split_evenly():
    disk = make_disk(1 << 14, 64)
    A, C, est = prepare(*gen_hard_instance(disk, 4096, 4096))
    assert A.U == 64
    rows = np.flatnonzero(est.z_hat)
    assert len(rows) == 64
    p1, p2, _ = split_once(rows, est.z_hat)
    assert abs(est.z_hat[p1].sum() - est.z_hat[p2].sum()) <= est.Z_hat / math.log2(A.U)


def test_split_scopes_stops_early():
    z = np.ones(16)
    parts, removed = split_scopes(np.arange(16), z, depth=10, stop_at=4)
    assert all(z[p].sum() <= 4 for p in parts)
    assert sorted(np.concatenate(parts).tolist() + removed) == list(range(16))


def test_single_color_is_the_whole_problem():
    disk = make_disk(1 << 16, 64)
    A = gen_random(disk, 32, 40, INT64, 1)
    C = gen_random(disk, 32, 40, INT64, 2)
    plan, subs, sink = run_color(A, C)
    assert plan.c == 1 and len(subs) == 1 and sink.count == 0
    assert subs[0].Ai.to_dict() == A.to_dict() and subs[0].Cij.to_dict() == C.to_dict()


def check_cover(A, C, subs, sink):
    want = oracle_multiply(A, C).as_dict()
    got = dict(sink.entries)
    for sp in subs:
        part = oracle_multiply(sp.Ai, sp.Cij).as_dict()
        assert not set(part) & set(got)
        got.update(part)
    assert got == want


@pytest.mark.parametrize("seed", range(3))
def test_hard_instance_with_four_colors(seed):
    disk = make_disk(4096, 64)
    A, C = gen_hard_instance(disk, 1024, 64, INT64, seed)
    plan, subs, sink = run_color(A, C, seed)
    assert plan.c == 4
    assert 1 < len(subs) <= 16
    for sp in subs:
        assert oracle_multiply(sp.Ai, sp.Cij).Z < sp.bound
    check_cover(A, C, subs, sink)


def test_dense_row_and_column_are_removed():
    # every row reaches column 7, so each row group's output is mostly that column
    disk = make_disk(4096, 64)
    U = 256
    rng = np.random.default_rng(0)
    a = {(i, int(k)): 1 for i, k in zip(range(U), rng.integers(0, U, U))}
    c = {(int(k), int(j)): 1 for k, j in zip(rng.integers(0, U, 10), rng.integers(0, U, 10))}
    a.update({(5, k): 1 for k in range(U)})
    c.update({(k, 7): 1 for k in range(U)})
    A = from_triples(disk, U, INT64, *zip(*[(i, k, v) for (i, k), v in sorted(a.items())]))
    C = from_triples(disk, U, INT64, *zip(*[(k, j, v) for (k, j), v in sorted(c.items())]))
    plan, subs, sink = run_color(A, C)
    assert plan.c > 1
    assert 5 in plan.removed_rows
    assert any(7 in cols for cols in plan.removed_cols.values())
    want = oracle_multiply(A, C).as_dict()
    assert {k: v for k, v in sink.entries.items() if k[0] == 5} == {k: v for k, v in want.items() if k[0] == 5}
    for sp in subs:
        assert oracle_multiply(sp.Ai, sp.Cij).Z < sp.bound
    check_cover(A, C, subs, sink)


def test_lone_heavy_column_is_dropped():
    z = np.zeros(8)
    z[3] = 10
    parts, removed = split_scopes(np.array([3]), z, depth=3, stop_at=2, drop_singletons=True)
    assert parts == [] and removed == [3]
    parts, removed = split_scopes(np.array([3]), z, depth=3, stop_at=2)
    assert [p.tolist() for p in parts] == [[3]] and removed == []


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6))
def test_disjoint_cover_and_removal_count(seed):
    disk = make_disk(1024, 16)
    rng = np.random.default_rng(seed)
    U = int(rng.integers(8, 64))
    A = gen_random(disk, U, int(rng.integers(0, 4 * U)), INT64, seed)
    C = gen_random(disk, U, int(rng.integers(0, 4 * U)), INT64, seed + 1)
    plan, subs, sink = run_color(A, C, seed)
    check_cover(A, C, subs, sink)
    assert len(plan.removed_rows) <= 8 * plan.c
    assert all(len(r) <= 8 * plan.c for r in plan.removed_cols.values())
    assert np.all(plan.row_color[plan.removed_rows] == REMOVED)
    used = set(plan.row_color[plan.row_color >= 0].tolist())
    assert all(g in used for g in plan.col_color)
    assert plan.n_subproblems == len(subs)
    assert disk.budget.peak <= disk.M
    assert ABSENT < REMOVED < 0
