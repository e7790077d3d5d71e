"""Monte-Carlo simulation of the two-phase n-way relay protocol.

Per frame (block fading) the relay observes ``sum_k H_k x_k + Z``, makes a
joint ML estimate of all users' symbols, maps it through a Latin
hyper-cube to a label and broadcasts that label as a point of a t-ary PSK.
Each user ML-detects the label and recovers everyone else's symbols from
its own. Bit errors are counted on the natural-binary symbol labels.

Frame ``f`` draws everything from ``default_rng([seed, f])``: fades,
messages and unit-variance noise. The noise is rescaled per SNR point and
both schemes see identical realizations, so the result does not depend
on how frames are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from nwaypnc import guards
from nwaypnc.constellation import _check_order, make_constellation
from nwaypnc.distance import CandidateSet, all_tuples, received_points
from nwaypnc.errors import InvalidParameter
from nwaypnc.fadespace import removable_subspaces
from nwaypnc.hypercube import ClusterMap, baseline_map, build_map_for_subspace

ADAPTIVE = "adaptive"
NON_ADAPTIVE = "non-adaptive"
SCHEMES = (ADAPTIVE, NON_ADAPTIVE)


class ConfigError(InvalidParameter):
    def __init__(self, problems):
        self.problems = dict(problems)
        super().__init__("; ".join(f"{k}: {v}" for k, v in self.problems.items()))


@dataclass(frozen=True)
class SimConfig:
    n: int
    M: int
    snr_db_list: tuple
    frames_per_point: int
    seed: int = 0
    schemes: tuple = SCHEMES
    rician_K_db: float = 20.0
    frame_bits: int = 256
    max_candidates: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        problems = {}
        try:
            M = _check_order(self.M)
        except InvalidParameter as exc:
            problems["M"] = str(exc)
            M = None
        if not isinstance(self.n, int) or self.n < 2:
            problems["n"] = f"must be an integer >= 2, got {self.n!r}"
        if M is not None:
            lam = M.bit_length() - 1
            if self.frame_bits < 1 or self.frame_bits % lam:
                problems["frame_bits"] = f"{self.frame_bits} is not a positive multiple of {lam} bits per symbol"
        if self.frames_per_point < 1:
            problems["frames_per_point"] = "must be >= 1"
        if not self.snr_db_list:
            problems["snr_db_list"] = "must not be empty"
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            problems["scheme"] = f"unknown scheme(s) {bad}; choose from {SCHEMES}"
        if not 0 <= self.seed < 2**64:
            problems["seed"] = "must fit in an unsigned 64-bit integer"
        if self.max_candidates is not None and self.max_candidates < 1:
            problems["max_candidates"] = "must be >= 1 or unlimited"
        if self.workers < 1:
            problems["workers"] = "must be >= 1"
        if problems:
            raise ConfigError(problems)

    @property
    def bits_per_symbol(self) -> int:
        return self.M.bit_length() - 1

    @property
    def symbols_per_frame(self) -> int:
        return self.frame_bits // self.bits_per_symbol


@dataclass(frozen=True)
class BerRecord:
    snr_db: float
    scheme: str
    bit_errors: int
    bits_total: int
    frames: int = 0
    n: int = 0
    M: int = 0
    seed: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total

    @property
    def std_error(self) -> float:
        p = self.ber
        return math.sqrt(p * (1.0 - p) / self.bits_total)


def sample_rician(K_db: float, rng: np.random.Generator, size=None):
    """Unit-power Rician gains with a zero-phase line-of-sight component."""
    if K_db == math.inf:
        return np.ones(size, dtype=complex) if size is not None else 1.0 + 0j
    K = 0.0 if K_db == -math.inf else 10.0 ** (K_db / 10.0)
    los = math.sqrt(K / (K + 1.0))
    scat = math.sqrt(1.0 / (2.0 * (K + 1.0)))
    shape = () if size is None else tuple(np.atleast_1d(size))
    g = rng.standard_normal(size=(2, *shape))
    h = los + scat * (g[0] + 1j * g[1])
    return complex(h) if size is None else h


def complex_noise(rng: np.random.Generator, size) -> np.ndarray:
    """Circularly symmetric CN(0, 1) samples."""
    g = rng.standard_normal(size=(2, *np.atleast_1d(size)))
    return (g[0] + 1j * g[1]) / math.sqrt(2.0)


def ma_phase(x, H, sigma: float, rng: np.random.Generator, M: int):
    """Relay observation for symbol indices ``x`` (shape ``(n, ...)``)."""
    x = np.asarray(x)
    H = np.asarray(H, dtype=complex)
    pts = make_constellation(M).points
    clean = np.tensordot(H, pts[x], axes=(0, 0))
    if sigma == 0:
        return clean
    return clean + sigma * complex_noise(rng, np.shape(clean) or 1).reshape(np.shape(clean))


def ml_joint_decode_flat(y, H, M: int) -> np.ndarray:
    """Flat index (first user slowest) of the ML tuple for each observation."""
    H = np.asarray(H, dtype=complex)
    guards.check(M**H.size, guards.ML_TUPLE_LIMIT, f"ml_joint_decode(n={H.size}, M={M})")
    P = received_points(H, M)
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    return np.argmin(np.abs(y[:, None] - P[None, :]), axis=1)


def ml_joint_decode(y: complex, H, n: int, M: int) -> tuple:
    """Exhaustive ML estimate of all users' symbol indices.

    Ties go to the lexicographically smallest tuple.
    """
    H = np.asarray(H, dtype=complex)
    if H.size != n:
        raise InvalidParameter(f"fade state has {H.size} gains, expected {n}")
    idx = int(ml_joint_decode_flat(y, H, M)[0])
    return tuple(int(c) for c in np.unravel_index(idx, (M,) * n))


def bc_points(t: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(t) / t)


def bc_detect(r, t: int, H_prime) -> np.ndarray:
    """ML label detection of t-ary PSK; ``H_prime`` broadcasts against ``r``."""
    r = np.asarray(r, dtype=complex)
    hp = np.broadcast_to(np.asarray(H_prime, dtype=complex), r.shape)
    return np.argmin(np.abs(r[..., None] - hp[..., None] * bc_points(t)), axis=-1) + 1


def bc_round(label, t: int, H_prime, sigma: float, rng: np.random.Generator):
    """Broadcast ``label`` as a t-PSK point and return the receiver's decision."""
    label = np.asarray(label)
    if np.any(label < 1) or np.any(label > t):
        raise InvalidParameter(f"label outside [1, {t}]")
    x = bc_points(t)[label - 1]
    r = H_prime * x
    if sigma:
        r = r + sigma * complex_noise(rng, np.shape(r) or 1).reshape(np.shape(r))
    out = bc_detect(r, t, H_prime)
    return int(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=8)
def adaptive_candidates(n: int, M: int, max_candidates: Optional[int] = None) -> CandidateSet:
    """One Latin hyper-cube per removable subspace, in key order."""
    keys = removable_subspaces(n, M)
    if max_candidates is not None:
        keys = keys[:max_candidates]
    return CandidateSet([(k, build_map_for_subspace(k)) for k in keys])


class _MapTables:
    def __init__(self, cmap: ClusterMap):
        self.flat = cmap.flat
        self.t = cmap.t
        self.inverse = cmap.inverse


class FrameEngine:
    """Everything a worker needs to simulate frames for one configuration."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        n, M = cfg.n, cfg.M
        self.pts = make_constellation(M).points
        self.tuples = all_tuples(n, M)
        self.popcount = np.array([bin(i).count("1") for i in range(M)], dtype=np.int64)
        self.sigmas = [math.sqrt(10.0 ** (-s / 10.0)) for s in cfg.snr_db_list]
        self.baseline = _MapTables(baseline_map(n, M)) if NON_ADAPTIVE in cfg.schemes else None
        if ADAPTIVE in cfg.schemes:
            self.candidates = adaptive_candidates(n, M, cfg.max_candidates)
            self.adaptive_tables = [_MapTables(m) for _, m in self.candidates.candidates]
        else:
            self.candidates = None

    def draw(self, frame_index: int):
        cfg = self.cfg
        rng = np.random.default_rng([cfg.seed, frame_index])
        n, S = cfg.n, cfg.symbols_per_frame
        H = sample_rician(cfg.rician_K_db, rng, n)
        Hp = sample_rician(cfg.rician_K_db, rng, n)
        msgs = rng.integers(0, cfg.M, size=(n, S))
        z_ma = complex_noise(rng, S)
        z_bc = complex_noise(rng, (n, S))
        return H, Hp, msgs, z_ma, z_bc

    def map_for(self, scheme, H) -> _MapTables:
        if scheme == NON_ADAPTIVE:
            return self.baseline
        return self.adaptive_tables[self.candidates.select_index(H)]

    def frame_errors(self, frame_index: int) -> np.ndarray:
        """Bit errors, shape ``(len(snr_db_list), len(schemes))``."""
        cfg = self.cfg
        n, M = cfg.n, cfg.M
        lam = cfg.bits_per_symbol
        H, Hp, msgs, z_ma, z_bc = self.draw(frame_index)
        P = received_points(H, M)
        clean = np.tensordot(H, self.pts[msgs], axes=(0, 0))
        maps = [self.map_for(s, H) for s in cfg.schemes]
        users = np.arange(n)[:, None]
        out = np.zeros((len(self.sigmas), len(maps)), dtype=np.int64)
        for si, sigma in enumerate(self.sigmas):
            y = clean + sigma * z_ma
            xhat = np.argmin(np.abs(y[:, None] - P[None, :]), axis=1)
            for mi, tab in enumerate(maps):
                lab = tab.flat[xhat]
                r = Hp[:, None] * bc_points(tab.t)[lab - 1][None, :] + sigma * z_bc
                dec = bc_detect(r, tab.t, Hp[:, None])
                cells = tab.inverse[users, msgs, dec]
                missing = cells < 0
                coords = self.tuples[np.where(missing, 0, cells)]  # (n, S, n)
                wrong = self.popcount[coords ^ msgs.T[None, :, :]].sum(axis=2)
                # own coordinate always matches when found
                wrong = np.where(missing, lam * (n - 1), wrong)
                out[si, mi] = int(wrong.sum())
        return out


_ENGINE = None


def _init_worker(cfg):
    global _ENGINE
    _ENGINE = FrameEngine(cfg)


def _run_chunk(bounds):
    start, stop = bounds
    total = np.zeros((len(_ENGINE.sigmas), len(_ENGINE.cfg.schemes)), dtype=np.int64)
    for f in range(start, stop):
        total += _ENGINE.frame_errors(f)
    return total


def _chunks(frames, parts):
    step = -(-frames // parts)
    return [(s, min(s + step, frames)) for s in range(0, frames, step)]


def run_simulation(cfg: SimConfig) -> list:
    """BER per (SNR point, scheme), in SNR-major order."""
    frames = cfg.frames_per_point
    if cfg.workers == 1:
        _init_worker(cfg)
        totals = [_run_chunk((0, frames))]
    else:
        chunks = _chunks(frames, cfg.workers * 4)
        with ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker, initargs=(cfg,)) as pool:
            totals = list(pool.map(_run_chunk, chunks))
    errors = np.sum(totals, axis=0)
    bits = frames * cfg.frame_bits * cfg.n * (cfg.n - 1)
    return [
        BerRecord(
            snr_db=snr,
            scheme=scheme,
            bit_errors=int(errors[si, mi]),
            bits_total=bits,
            frames=frames,
            n=cfg.n,
            M=cfg.M,
            seed=cfg.seed,
        )
        for si, snr in enumerate(cfg.snr_db_list)
        for mi, scheme in enumerate(cfg.schemes)
    ]
