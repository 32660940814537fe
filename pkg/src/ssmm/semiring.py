"""Abstract scalar algebra used by every algorithm in the package.

Algorithms only ever touch elements through ``add``, ``mul``, ``eq``,
``zero``, ``one`` and :func:`nat_scale`.  The three concrete instances carry
a ``kind`` tag so that the compiled kernels can specialise on them; a
semiring built with ``kind=None`` goes through the generic element loops.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

MASK64 = (1 << 64) - 1
INT64_MIN = -(1 << 63)

# Tropical +inf.  Finite values are kept far below this by the generators.
TROPICAL_INF = 1 << 62

KIND_INT64 = 0
KIND_BOOL = 1
KIND_TROPICAL = 2


def wrap64(x: int) -> int:
    """Reduce a Python int to signed 64-bit two's complement."""
    x &= MASK64
    return x - (1 << 64) if x >> 63 else x


@dataclass(frozen=True)
class Semiring:
    name: str
    zero: Any
    one: Any
    add: Callable[[Any, Any], Any] = field(repr=False)
    mul: Callable[[Any, Any], Any] = field(repr=False)
    eq: Callable[[Any, Any], bool] = field(repr=False)
    kind: Optional[int] = None
    has_cancellation: bool = False
    dtype: Any = object

    def is_zero(self, a) -> bool:
        return self.eq(a, self.zero)

    def sum(self, values) -> Any:
        acc = self.zero
        for v in values:
            acc = self.add(acc, v)
        return acc

    def parse(self, token: str):
        """Element from its file literal."""
        if self.name == "bool":
            if token not in ("0", "1"):
                raise ValueError(f"bad bool literal {token!r}")
            return token == "1"
        v = int(token)
        if self.name == "int64" and not (INT64_MIN <= v < (1 << 63)):
            raise ValueError(f"int64 literal out of range: {token}")
        if self.name == "tropical" and v >= TROPICAL_INF:
            raise ValueError(f"tropical literal out of range: {token}")
        return v

    def format(self, a) -> str:
        if self.name == "bool":
            return "1" if a else "0"
        return str(int(a))


def _trop_add(a, b):
    return a if a <= b else b


def _trop_mul(a, b):
    if a >= TROPICAL_INF or b >= TROPICAL_INF:
        return TROPICAL_INF
    return a + b


INT64 = Semiring(
    name="int64",
    zero=0,
    one=1,
    add=lambda a, b: wrap64(int(a) + int(b)),
    mul=lambda a, b: wrap64(int(a) * int(b)),
    eq=lambda a, b: a == b,
    kind=KIND_INT64,
    has_cancellation=True,
    dtype=np.int64,
)

BOOL = Semiring(
    name="bool",
    zero=False,
    one=True,
    add=lambda a, b: bool(a) or bool(b),
    mul=lambda a, b: bool(a) and bool(b),
    eq=lambda a, b: bool(a) == bool(b),
    kind=KIND_BOOL,
    dtype=np.int64,
)

TROPICAL = Semiring(
    name="tropical",
    zero=TROPICAL_INF,
    one=0,
    add=_trop_add,
    mul=_trop_mul,
    eq=lambda a, b: a == b,
    kind=KIND_TROPICAL,
    dtype=np.int64,
)

SEMIRINGS = {s.name: s for s in (INT64, BOOL, TROPICAL)}


def get_semiring(name: str) -> Semiring:
    try:
        return SEMIRINGS[name]
    except KeyError:
        raise ValueError(f"unknown semiring {name!r}") from None


def generic_copy(sr: Semiring, name: Optional[str] = None) -> Semiring:
    """Same algebra with the kernel tag stripped (forces generic loops)."""
    return Semiring(
        name=name or sr.name,
        zero=sr.zero,
        one=sr.one,
        add=sr.add,
        mul=sr.mul,
        eq=sr.eq,
        kind=None,
        has_cancellation=sr.has_cancellation,
        dtype=object,
    )


def nat_scale(sr: Semiring, n: int, a):
    """``a`` added to itself ``n`` times, by doubling."""
    if n < 1:
        raise ValueError("nat_scale needs n >= 1")
    result = None
    power = a
    while n:
        if n & 1:
            result = power if result is None else sr.add(result, power)
        n >>= 1
        if n:
            power = sr.add(power, power)
    return result
