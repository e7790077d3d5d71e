"""M-PSK constellation and its exact difference constellation.

Differences of two unit-circle points are stored as integer pairs
``(l, p)`` meaning ``2 sin(pi l / M) * exp(j pi p / M)``, with ``l`` in
``[1, M/2]`` picking the circle and ``p`` in ``[0, 2M)`` the phase on a
``pi/M`` grid. The encoding is injective, so sets of differences can be
deduplicated without any floating-point tolerance.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from nwaypnc.errors import InvalidParameter


def _check_order(M):
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)):
        raise InvalidParameter(f"M must be an integer, got {M!r}")
    M = int(M)
    if M < 2 or M & (M - 1):
        raise InvalidParameter(f"M must be a power of two >= 2, got {M}")
    return M


@dataclass(frozen=True)
class PskConstellation:
    """Symmetric M-PSK, ``points[k] = exp(j 2 pi k / M)``.

    Symbol index ``k`` carries the natural-binary bit label of ``k``.
    """

    M: int
    points: np.ndarray = field(repr=False, compare=False)

    @property
    def bits_per_symbol(self) -> int:
        return self.M.bit_length() - 1

    def bits(self, k):
        lam = self.bits_per_symbol
        return tuple((int(k) >> (lam - 1 - i)) & 1 for i in range(lam))

    def index_of_bits(self, bits):
        k = 0
        for b in bits:
            k = (k << 1) | int(b)
        return k

    def __len__(self):
        return self.M


@lru_cache(maxsize=None)
def make_constellation(M: int) -> PskConstellation:
    M = _check_order(M)
    k = np.arange(M)
    points = np.exp(2j * np.pi * k / M)
    points.setflags(write=False)
    return PskConstellation(M=M, points=points)


@dataclass(frozen=True, order=True)
class Delta:
    """One element of the difference constellation.

    ``l == 0`` encodes the zero difference (``p`` is then 0).
    """

    l: int
    p: int

    @property
    def is_zero(self) -> bool:
        return self.l == 0

    def value(self, M: int) -> complex:
        if self.l == 0:
            return 0j
        return 2.0 * math.sin(math.pi * self.l / M) * cmath.exp(1j * math.pi * self.p / M)

    def magnitude(self, M: int) -> float:
        return 2.0 * math.sin(math.pi * self.l / M)


ZERO = Delta(0, 0)


def delta_of(a: int, b: int, M: int) -> Delta:
    """Exact encoding of ``point[a] - point[b]``.

    Uses ``e^{ja} - e^{jb} = 2 sin((a-b)/2) * j * e^{j(a+b)/2}``; when
    ``a < b`` the sine is negative and the sign folds into a half-turn of
    the phase.
    """
    a %= M
    b %= M
    if a == b:
        return ZERO
    d = (a - b) % M
    l = min(d, M - d)
    p = a + b + M // 2
    if a < b:
        p += M
    return Delta(l, p % (2 * M))


@lru_cache(maxsize=None)
def _pair_table(M):
    table = {}
    for a in range(M):
        for b in range(M):
            table.setdefault(delta_of(a, b, M), []).append((a, b))
    return {d: tuple(pairs) for d, pairs in table.items()}


def difference_set(M: int) -> frozenset:
    M = _check_order(M)
    return frozenset(_pair_table(M))


def sorted_differences(M: int) -> tuple:
    """Difference constellation in a fixed order, zero first."""
    return tuple(sorted(difference_set(M)))


def pairs_realizing(delta: Delta, M: int) -> list:
    """All ordered index pairs ``(a, b)`` with ``point[a] - point[b] == delta``."""
    M = _check_order(M)
    try:
        return list(_pair_table(M)[delta])
    except KeyError:
        raise InvalidParameter(f"{delta} is not in the difference constellation of {M}-PSK") from None


def delta_from_complex(z: complex, M: int, tol: float = 1e-9) -> Delta:
    """Snap a complex number to the difference constellation element it equals."""
    M = _check_order(M)
    for d in _pair_table(M):
        if abs(d.value(M) - z) <= tol:
            return d
    raise InvalidParameter(f"{z} is not in the difference constellation of {M}-PSK")
