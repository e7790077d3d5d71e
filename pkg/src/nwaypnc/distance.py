"""Distances in the effective MA-phase constellation and adaptive map choice."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from nwaypnc import guards
from nwaypnc.constellation import _check_order, make_constellation
from nwaypnc.errors import InvalidParameter
from nwaypnc.hypercube import ClusterMap


@dataclass(frozen=True)
class DistanceReport:
    value: float
    argmin_pair: Optional[tuple] = None

    @property
    def finite(self) -> bool:
        return np.isfinite(self.value)


def all_tuples(n: int, M: int) -> np.ndarray:
    """Every symbol-index tuple, lexicographic with the first user slowest."""
    return np.array(np.unravel_index(np.arange(M**n), (M,) * n)).T


def received_points(H, M: int) -> np.ndarray:
    """Noise-free relay observation for every tuple, in lexicographic order."""
    H = np.asarray(H, dtype=complex)
    pts = make_constellation(M).points
    n = H.size
    grid = np.zeros((M,) * n, dtype=complex)
    for k in range(n):
        shape = [1] * n
        shape[k] = M
        grid = grid + (H[k] * pts).reshape(shape)
    return grid.reshape(-1)


def _as_fade(H, n):
    H = np.asarray(H, dtype=complex).reshape(-1)
    if n is not None and H.size != n:
        raise InvalidParameter(f"fade state has {H.size} gains, expected {n}")
    if not np.all(np.isfinite(H)):
        raise InvalidParameter("fade state must be finite")
    return H


def _report(D, n, M):
    idx = int(np.argmin(D))
    value = float(D.reshape(-1)[idx])
    if not np.isfinite(value):
        return DistanceReport(float("inf"))
    i, j = np.unravel_index(idx, D.shape)
    tuples = all_tuples(n, M)
    return DistanceReport(value, (tuple(int(c) for c in tuples[i]), tuple(int(c) for c in tuples[j])))


def pairwise_distances(P: np.ndarray) -> np.ndarray:
    return np.abs(P[:, None] - P[None, :])


def d_min_fade(H, n: int, M: int) -> DistanceReport:
    """Minimum distance between distinct tuples at the relay."""
    M = _check_order(M)
    H = _as_fade(H, n)
    guards.check(M ** (2 * n), guards.PAIR_SCAN_LIMIT, f"d_min_fade(n={n}, M={M})")
    D = pairwise_distances(received_points(H, M))
    np.fill_diagonal(D, np.inf)
    return _report(D, n, M)


def is_singular(H, n: int, M: int, tol: float = 1e-9) -> bool:
    H = _as_fade(H, n)
    return d_min_fade(H, n, M).value <= tol * np.linalg.norm(H)


def _check_map(cmap, H):
    H = _as_fade(H, cmap.n)
    guards.check(cmap.M ** (2 * cmap.n), guards.PAIR_SCAN_LIMIT, f"cluster distance scan (n={cmap.n}, M={cmap.M})")
    return H


def cluster_distance(cmap: ClusterMap, H, i: int, j: int) -> DistanceReport:
    """Minimum distance between a tuple labelled ``i`` and one labelled ``j``."""
    if i == j:
        raise InvalidParameter("cluster distance needs two different labels")
    for lab in (i, j):
        if not 1 <= lab <= cmap.t:
            raise InvalidParameter(f"label {lab} does not occur in the map (t={cmap.t})")
    H = _check_map(cmap, H)
    P = received_points(H, cmap.M)
    flat = cmap.flat
    a = np.flatnonzero(flat == i)
    b = np.flatnonzero(flat == j)
    D = np.abs(P[a][:, None] - P[b][None, :])
    k = int(np.argmin(D))
    r, c = np.unravel_index(k, D.shape)
    tuples = all_tuples(cmap.n, cmap.M)
    return DistanceReport(float(D[r, c]), (tuple(int(x) for x in tuples[a[r]]), tuple(int(x) for x in tuples[b[c]])))


def min_cluster_distance(cmap: ClusterMap, H) -> DistanceReport:
    """Minimum distance between tuples the map sends to different labels.

    ``inf`` when the map has a single label.
    """
    H = _check_map(cmap, H)
    D = pairwise_distances(received_points(H, cmap.M))
    flat = cmap.flat
    D[flat[:, None] == flat[None, :]] = np.inf
    return _report(D, cmap.n, cmap.M)


class CandidateSet:
    """Candidate maps with precomputed cross-cluster masks.

    Selection at a fade state is one vectorized reduction instead of a
    pair scan per map. Candidates are kept in key order so that
    :meth:`select` breaks ties exactly like :func:`select_map`.
    """

    def __init__(self, candidates: Sequence[tuple]):
        if not candidates:
            raise InvalidParameter("candidate list is empty")
        self.candidates = sorted(candidates, key=lambda c: c[0].sort_key())
        maps = [m for _, m in self.candidates]
        n, M = maps[0].n, maps[0].M
        if any(m.n != n or m.M != M for m in maps):
            raise InvalidParameter("candidate maps disagree on (n, M)")
        self.n, self.M = n, M
        iu = np.triu_indices(M**n, k=1)
        self._iu = iu
        flats = np.stack([m.flat for m in maps])
        self._cross = flats[:, iu[0]] != flats[:, iu[1]]

    def __len__(self):
        return len(self.candidates)

    def scores(self, H) -> np.ndarray:
        P = received_points(H, self.M)
        d = np.abs(P[self._iu[0]] - P[self._iu[1]])
        return np.where(self._cross, d[None, :], np.inf).min(axis=1)

    def select_index(self, H) -> int:
        # argmax returns the first maximum: list order breaks ties
        return int(np.argmax(self.scores(H)))

    def select(self, H) -> tuple:
        return self.candidates[self.select_index(H)]


def select_map(H, candidates: Sequence[tuple]) -> tuple:
    """Candidate ``(key, map)`` with the largest minimum cluster distance at ``H``.

    Ties go to the candidate whose key sorts first.
    """
    if not candidates:
        raise InvalidParameter("candidate list is empty")
    best = None
    best_val = -1.0
    for key, cmap in sorted(candidates, key=lambda c: c[0].sort_key()):
        val = min_cluster_distance(cmap, H).value
        if val > best_val:
            best, best_val = (key, cmap), val
    return best
