"""Two-level memory simulator: a disk of B-word blocks, an M-word internal
memory budget and a tally of block transfers.

One record (a matrix triple, a dense-vector word or a partial product) is
one word.  Records travel as :class:`Records`, three parallel arrays
``(i, j, v)``.  All algorithms move data through :class:`SimDisk` so the
tally reflects every transfer they make.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from typing import Callable, Iterator, List, NamedTuple, Optional

import numpy as np


class Records(NamedTuple):
    i: np.ndarray
    j: np.ndarray
    v: np.ndarray

    def __len__(self) -> int:
        return len(self.i)

    def take(self, idx) -> "Records":
        return Records(self.i[idx], self.j[idx], self.v[idx])

    @staticmethod
    def empty(dtype=np.int64) -> "Records":
        return Records(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, dtype))

    @staticmethod
    def concat(parts: List["Records"], dtype=np.int64) -> "Records":
        parts = [p for p in parts if len(p)]
        if not parts:
            return Records.empty(dtype)
        return Records(
            np.concatenate([p.i for p in parts]),
            np.concatenate([p.j for p in parts]),
            np.concatenate([p.v for p in parts]),
        )


class IoError(RuntimeError):
    """Invalid block access on the simulated disk."""


class MemoryBudgetError(RuntimeError):
    """Internal memory use exceeded M words."""


@dataclass(frozen=True)
class IoConfig:
    M: int
    B: int

    def __post_init__(self):
        if self.B < 2:
            raise ValueError("B must be at least 2")
        if self.M < 4 * self.B:
            raise ValueError("M must be at least 4B")
        if self.M % self.B:
            raise ValueError("M must be a multiple of B")

    @property
    def fan_in(self) -> int:
        return max(2, self.M // self.B - 1)


@dataclass
class IoTally:
    reads: int = 0
    writes: int = 0

    @property
    def total(self) -> int:
        return self.reads + self.writes

    def copy(self) -> "IoTally":
        return IoTally(self.reads, self.writes)

    def __sub__(self, other: "IoTally") -> "IoTally":
        return IoTally(self.reads - other.reads, self.writes - other.writes)

    def as_csv(self) -> str:
        return f"{self.reads},{self.writes},{self.total}"


class MemBudget:
    """Instrumented word count of internal memory.

    ``hold`` reserves words for the duration of a block of code; ``check``
    is a checkpoint that a transient allocation of ``extra`` words fits.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.in_use = 0
        self.peak = 0
        self.checkpoints = 0

    def check(self, extra: int = 0) -> None:
        self.checkpoints += 1
        level = self.in_use + extra
        if level > self.peak:
            self.peak = level
        if level > self.capacity:
            raise MemoryBudgetError(
                f"internal memory {level} words exceeds M={self.capacity}"
            )

    def acquire(self, words: int) -> None:
        self.in_use += words
        self.check()

    def release(self, words: int) -> None:
        self.in_use -= words
        assert self.in_use >= 0

    @contextlib.contextmanager
    def hold(self, words: int):
        self.acquire(words)
        try:
            yield
        finally:
            self.release(words)


@dataclass(frozen=True)
class Run:
    """A contiguous range of blocks holding ``n`` records."""

    start: int
    n: int
    nblocks: int

    @property
    def stop(self) -> int:
        return self.start + self.nblocks


EMPTY_RUN = Run(0, 0, 0)


def blocks_for(n: int, B: int) -> int:
    return -(-n // B)


class SimDisk:
    def __init__(self, config: IoConfig):
        self.config = config
        self.tally = IoTally()
        self.budget = MemBudget(config.M)
        self._blocks: List[Optional[Records]] = []

    @property
    def B(self) -> int:
        return self.config.B

    @property
    def M(self) -> int:
        return self.config.M

    def __len__(self) -> int:
        return len(self._blocks)

    def read_block(self, idx: int) -> Records:
        if idx < 0 or idx >= len(self._blocks) or self._blocks[idx] is None:
            raise IoError(f"block {idx} was never written")
        self.budget.check(self.B)
        self.tally.reads += 1
        return self._blocks[idx]

    def write_block(self, idx: int, payload: Records) -> None:
        if idx < 0 or idx > len(self._blocks):
            raise IoError(f"write to block {idx} would leave a gap")
        if len(payload) > self.B:
            raise IoError("payload larger than a block")
        self.tally.writes += 1
        if idx == len(self._blocks):
            self._blocks.append(payload)
        else:
            self._blocks[idx] = payload

    def charge(self, reads: int = 0, writes: int = 0) -> None:
        """Add modelled transfers for passes executed in vectorised form."""
        self.tally.reads += reads
        self.tally.writes += writes

    def snapshot(self) -> IoTally:
        return self.tally.copy()

    # -- runs --------------------------------------------------------------

    def write_run(self, recs: Records) -> Run:
        """Append ``recs`` as a fresh contiguous run (one write per block)."""
        n = len(recs)
        start = len(self._blocks)
        B = self.B
        for s in range(0, n, B):
            self.write_block(len(self._blocks), recs.take(slice(s, s + B)))
        return Run(start, n, blocks_for(n, B)) if n else Run(start, 0, 0)

    def install_run(self, recs: Records) -> Run:
        """Place input data on disk without charging (it starts out there)."""
        n = len(recs)
        start = len(self._blocks)
        for s in range(0, n, self.B):
            self._blocks.append(recs.take(slice(s, s + self.B)))
        return Run(start, n, blocks_for(n, self.B))

    def scan(self, run: Run) -> Iterator[Records]:
        for idx in range(run.start, run.stop):
            yield self.read_block(idx)

    def read_run(self, run: Run, dtype=np.int64) -> Records:
        return Records.concat(list(self.scan(run)), dtype)

    def peek_run(self, run: Run, dtype=np.int64) -> Records:
        """Contents without charging; for tests and the in-RAM oracle only."""
        parts = []
        for idx in range(run.start, run.stop):
            blk = self._blocks[idx]
            if blk is None:
                raise IoError(f"block {idx} was freed")
            parts.append(blk)
        return Records.concat(parts, dtype)

    def relink(self, block_ids: List[int], n: int) -> Run:
        """Chain already-written blocks into one run.

        Stands in for block pointers; moves payloads inside the simulator
        and is not a transfer.
        """
        start = len(self._blocks)
        for x in block_ids:
            self._blocks.append(self._blocks[x])
            self._blocks[x] = None
        return Run(start, n, len(block_ids))

    def free(self, run: Run) -> None:
        for idx in range(run.start, run.stop):
            self._blocks[idx] = None


class RunWriter:
    """Streams records to a fresh run, holding less than one block in memory.

    The blocks go through :meth:`SimDisk.relink` at the end, so runs written
    while other runs are being appended stay contiguous.
    """

    def __init__(self, disk: SimDisk, dtype=np.int64):
        self.disk = disk
        self.dtype = dtype
        self.pending = Records.empty(dtype)
        self.blocks: List[int] = []
        self.n = 0

    def append(self, recs: Records) -> None:
        if not len(recs):
            return
        B = self.disk.B
        self.pending = Records.concat([self.pending, recs], self.dtype)
        self.disk.budget.check(len(self.pending))
        while len(self.pending) >= B:
            self._flush(self.pending.take(slice(0, B)))
            self.pending = self.pending.take(slice(B, None))

    def _flush(self, blk: Records) -> None:
        idx = len(self.disk)
        self.disk.write_block(idx, blk)
        self.blocks.append(idx)
        self.n += len(blk)

    def close(self) -> Run:
        if len(self.pending):
            self._flush(self.pending)
            self.pending = Records.empty(self.dtype)
        if not self.blocks:
            return Run(len(self.disk), 0, 0)
        if self.blocks == list(range(self.blocks[0], self.blocks[0] + len(self.blocks))):
            return Run(self.blocks[0], self.n, len(self.blocks))
        return self.disk.relink(self.blocks, self.n)


def scan(disk: SimDisk, run: Run, visitor: Callable[[Records], None]) -> None:
    """Apply ``visitor`` to every block of ``run`` in order."""
    for blk in disk.scan(run):
        visitor(blk)


# -- sorting ---------------------------------------------------------------


def merge_passes(n: int, M: int, B: int) -> int:
    if n <= M:
        return 0
    runs = -(-n // M)
    k = max(2, M // B - 1)
    passes = 0
    while runs > 1:
        runs = -(-runs // k)
        passes += 1
    return passes


def sort_cost(n: int, M: int, B: int) -> int:
    """Transfers charged by :func:`external_sort` on ``n`` records."""
    if n == 0:
        return 0
    nb = blocks_for(n, B)
    return 2 * nb * (1 + merge_passes(n, M, B))


def sort_bound(n: int, M: int, B: int) -> float:
    """sort(n) as used in the asymptotic bounds: (n/B) * max(1, log_{M/B}(n/B))."""
    nb = max(1.0, n / B)
    return nb * max(1.0, math.log(nb) / math.log(M / B))


KeyFn = Callable[[Records], np.ndarray]


def external_sort(disk: SimDisk, run: Run, key: KeyFn, dtype=np.int64) -> Run:
    """Multiway merge sort of ``run`` by ``key`` (stable).

    Run formation reads and writes every block once; each merge pass with
    fan-in ``k = max(2, M/B - 1)`` reads and writes every block once more.
    """
    n = run.n
    if n == 0:
        return Run(len(disk), 0, 0)
    B, M = disk.B, disk.M
    per_run = M // B
    runs: List[Run] = []
    for s in range(run.start, run.stop, per_run):
        parts = []
        for x in range(s, min(s + per_run, run.stop)):
            blk = disk.read_block(x)
            disk.budget.acquire(len(blk))
            parts.append(blk)
        chunk = Records.concat(parts, dtype)
        order = np.argsort(key(chunk), kind="stable")
        runs.append(disk.write_run(chunk.take(order)))
        disk.budget.release(len(chunk))
    k = disk.config.fan_in
    while len(runs) > 1:
        runs = [_merge(disk, runs[g:g + k], key, dtype) for g in range(0, len(runs), k)]
    return runs[0]


def _merge(disk: SimDisk, group: List[Run], key: KeyFn, dtype) -> Run:
    """Streaming k-way merge holding one block per input plus an output buffer."""
    B = disk.B
    start = len(disk)
    total = sum(r.n for r in group)
    cursors = [r.start for r in group]
    loaded: List[Optional[Records]] = [None] * len(group)
    loaded_keys: List[Optional[np.ndarray]] = [None] * len(group)
    out = Records.empty(dtype)

    def refill(g):
        if cursors[g] < group[g].stop:
            blk = disk.read_block(cursors[g])
            cursors[g] += 1
            loaded[g], loaded_keys[g] = blk, key(blk)
        else:
            loaded[g], loaded_keys[g] = None, None

    def flush(final=False):
        nonlocal out
        while len(out) >= B or (final and len(out)):
            disk.write_block(len(disk), out.take(slice(0, B)))
            out = out.take(slice(B, None))

    for g in range(len(group)):
        refill(g)
    while any(b is not None for b in loaded):
        held = sum(len(b) for b in loaded if b is not None) + len(out)
        disk.budget.check(held)
        # ties break by run index, so everything up to the smallest
        # (last key, run) pair is final and the merge stays stable
        lim_key, lim_run = min((kk[-1], g) for g, kk in enumerate(loaded_keys) if kk is not None)
        parts, keys, runs = [], [], []
        for g, blk in enumerate(loaded):
            if blk is None:
                continue
            side = "right" if g <= lim_run else "left"
            cut = int(np.searchsorted(loaded_keys[g], lim_key, side=side))
            parts.append(blk.take(slice(0, cut)))
            keys.append(loaded_keys[g][:cut])
            runs.append(np.full(cut, g))
            if cut == len(blk):
                refill(g)
            else:
                loaded[g] = blk.take(slice(cut, None))
                loaded_keys[g] = loaded_keys[g][cut:]
        merged = Records.concat(parts, dtype)
        order = np.lexsort((np.concatenate(runs), np.concatenate(keys)))
        out = Records.concat([out, merged.take(order)], dtype)
        flush()
    flush(final=True)
    return Run(start, total, len(disk) - start)
