"""Relay maps as n-fold Latin hyper-cubes of side M.

A relay map assigns a cluster label to every tuple of transmitted symbol
indices. It satisfies the exclusive law exactly when, for each user ``k``
and each value of that user's symbol, the labels in the corresponding
``(n-1)``-dimensional slice are all distinct.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from nwaypnc.constellation import Delta, _check_order, pairs_realizing
from nwaypnc.errors import InvalidParameter, MapParseError, NonRemovableConstraint
from nwaypnc.fadespace import SubspaceKey

MAGIC = "pncmap v1"


@dataclass(frozen=True, eq=False)
class ClusterMap:
    """Dense ``M x ... x M`` array of labels in ``[1, t]``.

    Cell ``(x_1, ..., x_n)`` holds the label the relay broadcasts when it
    estimates that user ``k`` sent symbol index ``x_k``.
    """

    n: int
    M: int
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = np.array(self.labels, dtype=np.int64)
        if labels.shape != (self.M,) * self.n:
            raise InvalidParameter(f"labels have shape {labels.shape}, expected {(self.M,) * self.n}")
        if labels.size and labels.min() < 1:
            raise InvalidParameter("labels must be >= 1")
        t = int(labels.max())
        if np.unique(labels).size != t:
            raise InvalidParameter(f"labels must cover 1..{t} without gaps")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def t(self) -> int:
        return int(self.labels.max())

    @property
    def flat(self) -> np.ndarray:
        return self.labels.reshape(-1)

    def __getitem__(self, cell):
        return int(self.labels[tuple(cell)])

    def __eq__(self, other):
        if not isinstance(other, ClusterMap):
            return NotImplemented
        return self.n == other.n and self.M == other.M and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.n, self.M, self.labels.tobytes()))

    def cells_with(self, label):
        return [tuple(int(c) for c in idx) for idx in np.argwhere(self.labels == label)]

    @cached_property
    def inverse(self) -> np.ndarray:
        """``inverse[k, own, label]`` is the flat cell index, or -1.

        Only meaningful when the exclusive law holds; otherwise a later
        cell overwrites an earlier one.
        """
        n, M = self.n, self.M
        inv = np.full((n, M, self.t + 1), -1, dtype=np.int64)
        flat = self.flat
        coords = np.array(np.unravel_index(np.arange(M**n), (M,) * n))
        for k in range(n):
            inv[k, coords[k], flat] = np.arange(M**n)
        inv.setflags(write=False)
        return inv


@dataclass(frozen=True)
class ConstraintPartition:
    """Groups of cells that must carry the same label."""

    n: int
    M: int
    groups: tuple

    def __len__(self):
        return len(self.groups)

    def group_of(self, cell):
        cell = tuple(cell)
        for i, g in enumerate(self.groups):
            if cell in g:
                return i
        return None


def first_violation(cmap: ClusterMap):
    """First ``(k, value, label)`` whose slice repeats a label, else ``None``.

    ``k`` is the 0-based user index whose symbol is held fixed.
    """
    for k in range(cmap.n):
        for v in range(cmap.M):
            sl = np.take(cmap.labels, v, axis=k).reshape(-1)
            uniq, counts = np.unique(sl, return_counts=True)
            if np.any(counts > 1):
                return k, v, int(uniq[np.argmax(counts > 1)])
    return None


def exclusive_law_holds(cmap: ClusterMap) -> bool:
    return first_violation(cmap) is None


def class_members(key: SubspaceKey) -> list:
    """All difference vectors proportional to the representative of ``key``."""
    M = key.M
    if key.mags is None:
        mag_choices = [(l,) * len(key.support) for l in range(1, M // 2 + 1)]
    else:
        mag_choices = [key.mags]
    members = []
    for mags in mag_choices:
        parity = (mags[0] + M // 2) % 2
        for p_ref in range(parity, 2 * M, 2):
            comps = [Delta(0, 0)] * key.n
            for idx, l, rel in zip(key.support, mags, key.rel_phases):
                comps[idx] = Delta(l, (p_ref + rel) % (2 * M))
            members.append(tuple(comps))
    return members


def _realizing_pairs(v, M):
    per_comp = []
    for d in v:
        if d.is_zero:
            per_comp.append([(a, a) for a in range(M)])
        else:
            per_comp.append(pairs_realizing(d, M))
    for combo in itertools.product(*per_comp):
        yield tuple(a for a, _ in combo), tuple(b for _, b in combo)


def removal_constraints(key: SubspaceKey) -> ConstraintPartition:
    """Cells that must share a cluster for the map to remove ``key``'s subspace.

    Any two tuples whose difference vector lies in the proportionality
    class of the key coincide at the relay for every fade state in the
    subspace, so they are merged; the result is the transitive closure.
    """
    n, M = key.n, key.M
    ds = DisjointSet()
    for v in class_members(key):
        for x, xp in _realizing_pairs(v, M):
            ds.add(x)
            ds.add(xp)
            ds.merge(x, xp)
    groups = [tuple(sorted(s)) for s in ds.subsets() if len(s) > 1]
    groups.sort()
    return ConstraintPartition(n=n, M=M, groups=tuple(groups))


def _check_group(group, n):
    for k in range(n):
        seen = {}
        for cell in group:
            other = seen.get(cell[k])
            if other is not None:
                raise NonRemovableConstraint(
                    f"cells {other} and {cell} share symbol {cell[k]} of user {k}; "
                    "placing them in one cluster breaks the exclusive law",
                    coordinate=k,
                    cells=(other, cell),
                )
            seen[cell[k]] = cell


def fill_greedy(constraints: ConstraintPartition) -> ClusterMap:
    """Complete a constrained array into a Latin hyper-cube.

    Constraint groups get labels ``1..G`` in the order of their smallest
    cell. The remaining cells are visited lexicographically (first user's
    symbol slowest) and each takes the smallest label absent from every
    axis slice through it, opening a new label when none is free.
    """
    n, M = constraints.n, _check_order(constraints.M)
    labels = np.zeros((M,) * n, dtype=np.int64)
    used = [[set() for _ in range(M)] for _ in range(n)]

    groups = sorted(constraints.groups, key=min)
    for g in groups:
        _check_group(g, n)
    for label, g in enumerate(groups, start=1):
        for cell in g:
            if labels[cell]:
                raise InvalidParameter(f"cell {cell} appears in more than one constraint group")
            labels[cell] = label
            for k in range(n):
                used[k][cell[k]].add(label)

    for cell in itertools.product(range(M), repeat=n):
        if labels[cell]:
            continue
        slices = [used[k][cell[k]] for k in range(n)]
        c = 1
        while any(c in s for s in slices):
            c += 1
        labels[cell] = c
        for s in slices:
            s.add(c)
    return ClusterMap(n=n, M=M, labels=labels)


def build_map_for_subspace(key: SubspaceKey) -> ClusterMap:
    return fill_greedy(removal_constraints(key))


def baseline_map(n: int, M: int) -> ClusterMap:
    """Fixed map labelling a cell by its offsets ``(x_k - x_1) mod M``, k >= 2."""
    M = _check_order(M)
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    grids = np.indices((M,) * n)
    code = np.zeros((M,) * n, dtype=np.int64)
    for k in range(1, n):
        code = code * M + (grids[k] - grids[0]) % M
    return ClusterMap(n=n, M=M, labels=code + 1)


def decode_others(cmap: ClusterMap, k: int, own: int, label: int) -> Optional[tuple]:
    """Symbols of every user except ``k`` given ``k``'s own symbol and the label.

    ``k`` is 0-based. Returns ``None`` when the label does not occur in
    that slice.
    """
    if not 0 <= k < cmap.n:
        raise InvalidParameter(f"user index {k} out of range for n={cmap.n}")
    if not 1 <= label <= cmap.t:
        return None
    idx = cmap.inverse[k, own, label]
    if idx < 0:
        return None
    cell = np.unravel_index(int(idx), (cmap.M,) * cmap.n)
    return tuple(int(c) for i, c in enumerate(cell) if i != k)


def serialize_map(cmap: ClusterMap, comment: Optional[str] = None) -> str:
    lines = [MAGIC]
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"n={cmap.n} M={cmap.M} t={cmap.t}")
    rows = cmap.flat.reshape(-1, cmap.M)
    lines.extend(" ".join(str(int(x)) for x in row) for row in rows)
    return "\n".join(lines) + "\n"


_HEADER = re.compile(r"^n=(\d+)\s+M=(\d+)\s+t=(\d+)$")


def parse_map(text: str) -> ClusterMap:
    content = [
        (no, line.strip())
        for no, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.strip().startswith("#")
    ]
    if not content or content[0][1] != MAGIC:
        raise MapParseError(f"expected '{MAGIC}'", line=content[0][0] if content else 1)
    if len(content) < 2:
        raise MapParseError("missing 'n=.. M=.. t=..' header", line=content[0][0] + 1)
    hno, header = content[1]
    m = _HEADER.match(header)
    if not m:
        raise MapParseError(f"malformed header {header!r}", line=hno)
    n, M, t = (int(g) for g in m.groups())
    try:
        _check_order(M)
    except InvalidParameter as exc:
        raise MapParseError(str(exc), line=hno) from None
    if n < 2:
        raise MapParseError(f"n must be >= 2, got {n}", line=hno)

    values = []
    last = hno
    for no, line in content[2:]:
        last = no
        for tok in line.split():
            try:
                val = int(tok)
            except ValueError:
                raise MapParseError(f"label {tok!r} is not an integer", line=no) from None
            if not 1 <= val <= t:
                raise MapParseError(f"label {val} outside [1, {t}]", line=no)
            values.append(val)
    if len(values) != M**n:
        raise MapParseError(f"expected {M**n} labels, found {len(values)}", line=last)
    labels = np.array(values, dtype=np.int64).reshape((M,) * n)
    missing = sorted(set(range(1, t + 1)) - set(values))
    if missing:
        raise MapParseError(f"labels {missing[:5]} declared by t={t} never occur", line=hno)
    return ClusterMap(n=n, M=M, labels=labels)
