"""Singular fade subspaces: canonical keys, enumeration and counting.

A singular fade subspace is the set of fade states ``H`` annihilating a
difference vector ``v`` under the plain (non-conjugated) dot product. Two
difference vectors give the same subspace exactly when one is a complex
multiple of the other, so a subspace is identified with the
proportionality class of ``v``. :class:`SubspaceKey` is a canonical
representative of that class built from the exact ``(l, p)`` encoding.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Optional, Sequence

import numpy as np

from nwaypnc import guards
from nwaypnc.constellation import Delta, _check_order, sorted_differences
from nwaypnc.errors import InvalidParameter


@dataclass(frozen=True)
class SubspaceKey:
    """Canonical key of a proportionality class of difference vectors.

    Attributes
    ----------
    n, M : int
        Number of users and PSK order.
    support : tuple of int
        Positions (0-based, ascending) of the nonzero components.
    mags : tuple of int or None
        Circle index ``l`` of each supported component, or ``None`` when all
        of them lie on the same circle (the class then contains vectors on
        every circle).
    rel_phases : tuple of int
        Phase steps of each supported component relative to the first one,
        modulo ``2M``. The first entry is always 0.
    """

    n: int
    M: int
    support: tuple
    mags: Optional[tuple]
    rel_phases: tuple

    @property
    def uniform(self) -> bool:
        return self.mags is None

    def sort_key(self):
        return (self.n, self.M, self.support, 0 if self.mags is None else 1, self.mags or (), self.rel_phases)

    def representative(self) -> tuple:
        """One difference vector of the class, as a tuple of :class:`Delta`."""
        M = self.M
        if self.mags is None:
            mags = (M // 2,) * len(self.support)
        else:
            mags = self.mags
        # the phase grid of circle l has the parity of l + M/2
        p_ref = (mags[0] + M // 2) % 2
        comps = [Delta(0, 0)] * self.n
        for idx, l, rel in zip(self.support, mags, self.rel_phases):
            comps[idx] = Delta(l, (p_ref + rel) % (2 * M))
        return tuple(comps)

    def representative_vector(self) -> np.ndarray:
        return np.array([d.value(self.M) for d in self.representative()], dtype=complex)

    def __str__(self):
        mags = "uniform" if self.mags is None else ",".join(map(str, self.mags))
        return (
            f"n={self.n} M={self.M} support={','.join(map(str, self.support))} "
            f"mags={mags} phases={','.join(map(str, self.rel_phases))}"
        )


def canonicalize(v: Sequence[Delta], M: int) -> SubspaceKey:
    M = _check_order(M)
    n = len(v)
    support = tuple(i for i, d in enumerate(v) if not d.is_zero)
    if not support:
        raise InvalidParameter("the all-zero difference vector does not define a subspace")
    ls = tuple(v[i].l for i in support)
    p_ref = v[support[0]].p
    rel = tuple((v[i].p - p_ref) % (2 * M) for i in support)
    mags = None if len(set(ls)) == 1 else ls
    return SubspaceKey(n=n, M=M, support=support, mags=mags, rel_phases=rel)


def enumerate_subspaces(n: int, M: int, cap: int = guards.ENUMERATION_LIMIT) -> set:
    """Exhaustive enumeration of the singular fade subspaces.

    Every nonzero vector of the n-fold difference constellation is
    canonicalized and the keys deduplicated.
    """
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    M = _check_order(M)
    deltas = sorted_differences(M)
    guards.check(len(deltas) ** n, cap, f"enumerate_subspaces(n={n}, M={M})")
    keys = set()
    for v in itertools.product(deltas, repeat=n):
        if all(d.is_zero for d in v):
            continue
        keys.add(canonicalize(v, M))
    return keys


def sorted_subspaces(n: int, M: int) -> list:
    return sorted(enumerate_subspaces(n, M), key=SubspaceKey.sort_key)


def removable_subspaces(n: int, M: int) -> list:
    return [k for k in sorted_subspaces(n, M) if is_removable(k)]


def _term(n, k, M):
    h = M // 2
    return comb(n, k) * (h**k - h + 1) * M ** (k - 1)


def count_formula(n: int, M: int) -> int:
    """Closed-form number of singular fade subspaces."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    M = _check_order(M)
    return sum(_term(n, k, M) for k in range(1, n + 1))


def removable_count_formula(n: int, M: int) -> tuple:
    """``(removable, non_removable)`` subspace counts in closed form."""
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    M = _check_order(M)
    h = M // 2
    removable = (h**n - h + 1) * M ** (n - 1)
    non_removable = sum(_term(n, k, M) for k in range(1, n))
    return removable, non_removable


def is_removable(key: SubspaceKey) -> bool:
    return len(key.support) == key.n


def subspace_contains(H, key: SubspaceKey, tol: float = 1e-9) -> bool:
    H = np.asarray(H, dtype=complex)
    if H.shape != (key.n,):
        raise InvalidParameter(f"fade state has {H.size} gains, key expects {key.n}")
    v = key.representative_vector()
    return abs(np.sum(H * v)) <= tol * np.linalg.norm(H) * np.linalg.norm(v)


def sample_in_subspace(key: SubspaceKey, rng: np.random.Generator) -> np.ndarray:
    """A random fade state lying in the subspace of ``key``."""
    v = key.representative_vector()
    w = rng.standard_normal(key.n) + 1j * rng.standard_normal(key.n)
    return w - (np.sum(w * v) / np.sum(np.conj(v) * v)) * np.conj(v)


def perp_basis(v) -> np.ndarray:
    """Rows spanning the complement ``{w : sum(w * v) == 0}`` (n-1 of them)."""
    v = np.asarray(v, dtype=complex)
    nz = np.flatnonzero(np.abs(v) > 0)
    if nz.size == 0:
        raise InvalidParameter("zero vector")
    pivot = nz[0]
    rows = []
    for i in range(v.size):
        if i == pivot:
            continue
        row = np.zeros(v.size, dtype=complex)
        row[i] = 1.0
        row[pivot] = -v[i] / v[pivot]
        rows.append(row)
    return np.array(rows)
