"""Independent floating-point reference computations.

Nothing here uses the exact (l, p) encoding or the canonical keys; these
routines work on plain complex numbers so they can check the fast paths.
"""

import itertools

import numpy as np


def psk(M):
    return [np.exp(2j * np.pi * k / M) for k in range(M)]


def rounded(z, digits=9):
    return (round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0)


def difference_values(M):
    pts = psk(M)
    return {rounded(a - b): a - b for a in pts for b in pts}


def proportionality_class(vec, digits=7):
    """Hashable id shared exactly by complex multiples of ``vec``."""
    vec = np.asarray(vec, dtype=complex)
    nz = np.flatnonzero(np.abs(vec) > 1e-12)
    normed = vec / vec[nz[0]]
    return tuple(rounded(z, digits) for z in normed)


def brute_subspace_count(n, M):
    diffs = list(difference_values(M).values())
    classes = set()
    for v in itertools.product(diffs, repeat=n):
        if all(abs(z) < 1e-12 for z in v):
            continue
        classes.add(proportionality_class(v))
    return len(classes)


class SimpleUnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def groups(self):
        out = {}
        for x in list(self.parent):
            out.setdefault(self.find(x), []).append(x)
        return sorted(tuple(sorted(g)) for g in out.values() if len(g) > 1)


def brute_constraint_groups(v, M):
    """Union of all cell pairs whose difference is a complex multiple of ``v``."""
    n = len(v)
    pts = psk(M)
    target = proportionality_class(v)
    uf = SimpleUnionFind()
    cells = list(itertools.product(range(M), repeat=n))
    for x in cells:
        for xp in cells:
            if x >= xp:
                continue
            d = [pts[a] - pts[b] for a, b in zip(x, xp)]
            if all(abs(z) < 1e-12 for z in d):
                continue
            if proportionality_class(d) == target:
                uf.union(x, xp)
    return uf.groups()


def brute_dmin(H, M, labels=None):
    """Minimum |sum H_k (x_k - x'_k)|, iterating in reverse order.

    With ``labels`` (dict cell -> label) only cross-label pairs count.
    """
    n = len(H)
    pts = psk(M)
    cells = list(itertools.product(range(M), repeat=n))[::-1]
    best = float("inf")
    for x in cells:
        for xp in cells:
            if x == xp:
                continue
            if labels is not None and labels[x] == labels[xp]:
                continue
            d = abs(sum(h * (pts[a] - pts[b]) for h, a, b in zip(H, x, xp)))
            best = min(best, d)
    return best


def brute_ml(y, H, M):
    """ML tuple by reversed exhaustive scan with explicit lexicographic tie-break."""
    n = len(H)
    pts = psk(M)
    best, best_cell = None, None
    for x in reversed(list(itertools.product(range(M), repeat=n))):
        d = abs(y - sum(h * pts[a] for h, a in zip(H, x)))
        if best is None or d < best or (d == best and x < best_cell):
            best, best_cell = d, x
    return best_cell
