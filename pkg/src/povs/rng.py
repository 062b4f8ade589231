"""Deterministic generation of simulated partially overlapping samples.

Pipeline: MT19937 32-bit words -> open-interval uniforms -> Box-Muller
standard normals -> correlated pairs -> distribution transform -> sample.

Every replicate of every design cell draws from its own MT19937 seeded with
:func:`derive_seed`, so a replicate's data depend only on
``(master_seed, cell_index, replicate_index)``. :class:`MT19937` holds any
number of independent generators side by side so a whole cell can be drawn
with array operations.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .sample import PartiallyOverlappingSample
from .special import normal_logcdf

__all__ = [
    "CellParams",
    "Distribution",
    "MT19937",
    "correlated_pair",
    "derive_seed",
    "gen_cell_arrays",
    "gen_cell_sample",
    "mt19937_next_u32",
    "mt19937_seed",
    "next_std_normal",
    "next_uniform",
    "std_normals",
    "transform_deviate",
    "uniforms_per_replicate",
]

_N = 624
_M = 397
_MATRIX_A = np.uint32(0x9908B0DF)
_UPPER = np.uint32(0x80000000)
_LOWER = np.uint32(0x7FFFFFFF)
_MASK32 = 0xFFFFFFFF
# Twist in three slices; each slice only reads words already in their
# final state for that pass (see the sequential reference algorithm).
_SLICES = ((0, _N - _M), (_N - _M, 2 * (_N - _M)), (2 * (_N - _M), _N - 1))

SEED_MUL_MASTER = 0x9E3779B97F4A7C15
SEED_MUL_CELL = 0xBF58476D1CE4E5B9


class MT19937:
    """One or many independent 32-bit Mersenne Twisters.

    ``MT19937(5489)`` is a single generator; ``MT19937([s0, s1, ...])`` holds
    one generator per seed and draws from all of them in lockstep.
    """

    def __init__(self, seed):
        seeds = np.atleast_1d(np.asarray(seed, dtype=np.int64))
        if np.any(seeds < 0) or np.any(seeds > _MASK32):
            raise ValueError("MT19937 seeds must be 32-bit unsigned integers")
        self.batched = np.ndim(seed) > 0
        mt = np.empty((len(seeds), _N), dtype=np.uint32)
        mt[:, 0] = seeds.astype(np.uint32)
        for i in range(1, _N):
            prev = mt[:, i - 1]
            mt[:, i] = np.uint32(1812433253) * (prev ^ (prev >> np.uint32(30))) + np.uint32(i)
        self.mt = mt
        self.index = _N
        self.spare_normal = None

    def _twist(self):
        mt = self.mt
        for lo, hi in _SLICES:
            partner = (np.arange(lo, hi) + _M) % _N
            y = (mt[:, lo:hi] & _UPPER) | (mt[:, lo + 1:hi + 1] & _LOWER)
            mt[:, lo:hi] = mt[:, partner] ^ (y >> np.uint32(1)) ^ ((y & np.uint32(1)) * _MATRIX_A)
        y = (mt[:, _N - 1] & _UPPER) | (mt[:, 0] & _LOWER)
        mt[:, _N - 1] = mt[:, _M - 1] ^ (y >> np.uint32(1)) ^ ((y & np.uint32(1)) * _MATRIX_A)
        self.index = 0

    def random_raw(self, count: int) -> np.ndarray:
        """Next ``count`` tempered words, shape ``(count,)`` or ``(R, count)``."""
        out = np.empty((self.mt.shape[0], count), dtype=np.uint32)
        filled = 0
        while filled < count:
            if self.index >= _N:
                self._twist()
            take = min(count - filled, _N - self.index)
            out[:, filled:filled + take] = self.mt[:, self.index:self.index + take]
            self.index += take
            filled += take
        y = out
        y ^= y >> np.uint32(11)
        y ^= (y << np.uint32(7)) & np.uint32(0x9D2C5680)
        y ^= (y << np.uint32(15)) & np.uint32(0xEFC60000)
        y ^= y >> np.uint32(18)
        return y if self.batched else y[0]

    def next_u32(self) -> int:
        if self.batched:
            raise TypeError("next_u32 is only defined for a single generator")
        return int(self.random_raw(1)[0])


def mt19937_seed(seed: int) -> MT19937:
    """A single generator seeded with the reference 32-bit initialisation."""
    return MT19937(int(seed))


def mt19937_next_u32(state: MT19937) -> int:
    return state.next_u32()


def derive_seed(master_seed: int, cell_index: int, replicate_index: int) -> int:
    """32-bit substream seed for one replicate of one design cell.

    Low 32 bits of ``master*0x9E3779B97F4A7C15 ^ cell*0xBF58476D1CE4E5B9 ^ replicate``
    (products taken modulo 2**64).
    """
    if min(master_seed, cell_index, replicate_index) < 0:
        raise ValueError("seed components must be non-negative")
    mixed = ((master_seed * SEED_MUL_MASTER) & 0xFFFFFFFFFFFFFFFF) ^ (
        (cell_index * SEED_MUL_CELL) & 0xFFFFFFFFFFFFFFFF
    ) ^ replicate_index
    return mixed & _MASK32


def _to_uniform(words):
    return (words.astype(np.float64) + 0.5) / 4294967296.0


def next_uniform(state: MT19937):
    """Uniform deviate strictly inside (0, 1)."""
    u = _to_uniform(state.random_raw(1))
    return float(u[0]) if not state.batched else u[:, 0]


def _box_muller(u1, u2):
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    return radius * np.cos(angle), radius * np.sin(angle)


def std_normals(state: MT19937, count: int) -> np.ndarray:
    """``count`` standard normals; uniforms are consumed two per normal pair.

    An odd count leaves the second member of the last pair as a spare that
    the next call (or :func:`next_std_normal`) returns first.
    """
    lead = []
    if state.spare_normal is not None and count > 0:
        lead = [state.spare_normal]
        state.spare_normal = None
        count -= 1
    n_pairs = (count + 1) // 2
    u = _to_uniform(state.random_raw(2 * n_pairs))
    u = u.reshape(u.shape[:-1] + (n_pairs, 2))
    z1, z2 = _box_muller(u[..., 0], u[..., 1])
    z = np.stack([z1, z2], axis=-1).reshape(u.shape[:-2] + (2 * n_pairs,))
    if count % 2:
        state.spare_normal = z[..., -1].copy()
    z = z[..., :count]
    if lead:
        lead_arr = np.asarray(lead[0])[..., None]
        z = np.concatenate([lead_arr, z], axis=-1)
    return z


def next_std_normal(state: MT19937):
    z = std_normals(state, 1)
    return float(z[0]) if not state.batched else z[:, 0]


def uniforms_per_replicate(n_a: int, n_b: int, n_c: int) -> int:
    """Uniforms consumed by one simulated sample (from a fresh substream)."""
    normals = 2 * n_c + n_a + n_b
    return 2 * ((normals + 1) // 2)


def correlated_pair(z1, z2, rho):
    """Turn independent standard normals into a pair with correlation ``rho``."""
    if not -1.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [-1, 1]")
    wa = math.sqrt((1.0 + rho) / 2.0)
    wb = math.sqrt((1.0 - rho) / 2.0)
    return wa * z1 + wb * z2, wa * z1 - wb * z2


class Distribution(str, enum.Enum):
    """Population shapes obtained by transforming standard normal deviates.

    ``skewness``/``kurtosis`` are the reference values tabulated alongside
    each transform (non-excess kurtosis).
    """

    NORMAL = "Normal"
    GUMBEL = "Gumbel"
    EXPONENTIAL = "Exponential"
    LOGNORMAL = "Lognormal"

    @property
    def skewness(self) -> float:
        return _MOMENTS[self][0]

    @property
    def kurtosis(self) -> float:
        return _MOMENTS[self][1]

    @classmethod
    def parse(cls, name: str) -> "Distribution":
        if isinstance(name, cls):
            return name
        for d in cls:
            if d.value.lower() == str(name).lower():
                return d
        raise ValueError(f"unknown distribution {name!r}")


_MOMENTS = {
    Distribution.NORMAL: (0.000, 3.000),
    Distribution.GUMBEL: (1.140, 5.400),
    Distribution.EXPONENTIAL: (2.004, 9.000),
    Distribution.LOGNORMAL: (6.145, 107.256),
}


def transform_deviate(z, dist: Distribution):
    """Map standard normal ``z`` to ``dist``; strictly increasing in ``z``.

    Gumbel and Exponential go through ``U = Phi(z)``, evaluated on the log
    scale so ``U`` never rounds to 1. Exponential uses ``-log(1 - U) - 1``:
    the same law as ``-log(U) - 1`` and equal at ``z = 0``, but increasing.
    """
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=float)
    if dist is Distribution.NORMAL:
        x = z.copy()
    elif dist is Distribution.GUMBEL:
        x = -np.log(-normal_logcdf(z))
    elif dist is Distribution.EXPONENTIAL:
        x = -normal_logcdf(-z) - 1.0
    elif dist is Distribution.LOGNORMAL:
        x = np.exp(z)
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    return float(x) if scalar else x


@dataclass(frozen=True)
class CellParams:
    """One point of the factorial design."""

    n_a: int
    n_b: int
    n_c: int
    rho: float
    dist: Distribution = Distribution.NORMAL
    delta: float = 0.0

    def __post_init__(self):
        if min(self.n_a, self.n_b, self.n_c) < 0:
            raise ValueError("sample counts must be non-negative")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")
        if not isinstance(self.dist, Distribution):
            object.__setattr__(self, "dist", Distribution.parse(self.dist))


def _draw(p: CellParams, state: MT19937):
    """Normals in fixed order: pairs (z1, z2 per pair), unpaired_a, unpaired_b."""
    z = std_normals(state, 2 * p.n_c + p.n_a + p.n_b)
    pairs_end = 2 * p.n_c
    x1, x2 = correlated_pair(z[..., 0:pairs_end:2], z[..., 1:pairs_end:2], p.rho)
    only_a = z[..., pairs_end:pairs_end + p.n_a]
    only_b = z[..., pairs_end + p.n_a:]
    x1, x2, only_a, only_b = (transform_deviate(v, p.dist) for v in (x1, x2, only_a, only_b))
    return x1, x2 + p.delta, only_a, only_b + p.delta


def gen_cell_sample(p: CellParams, state: MT19937) -> PartiallyOverlappingSample:
    """Draw one simulated sample from a single-generator ``state``."""
    if state.batched:
        raise TypeError("gen_cell_sample needs a single generator; use gen_cell_arrays")
    x1, x2, only_a, only_b = _draw(p, state)
    return PartiallyOverlappingSample(np.column_stack([x1, x2]), only_a, only_b)


def gen_cell_arrays(p: CellParams, master_seed: int, cell_index: int,
                    replicates: range):
    """Draw the given replicates of a cell at once.

    Returns ``(pair1, pair2, only_a, only_b)`` arrays of shape
    ``(len(replicates), n)``; row ``k`` is identical to
    ``gen_cell_sample(p, mt19937_seed(derive_seed(master_seed, cell_index,
    replicates[k])))``.
    """
    seeds = [derive_seed(master_seed, cell_index, r) for r in replicates]
    return _draw(p, MT19937(seeds))
