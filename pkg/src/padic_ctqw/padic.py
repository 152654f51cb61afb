"""Finite-level arithmetic on the 2-adic integers.

A level ``l`` partitions Z_2 into the ``2**l`` balls ``I + 2**l Z_2`` with
``0 <= I < 2**l``.  Each ball has Haar measure ``2**-l``.  Balls are always
ordered by the integer value of their residue.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError

DEFAULT_LEVEL_CAP = 20
LEVEL_CAP_ENV = "PADIC_CTQW_LEVEL_CAP"


def level_cap() -> int:
    """Largest admissible level; ``PADIC_CTQW_LEVEL_CAP`` overrides the default."""
    raw = os.environ.get(LEVEL_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_LEVEL_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ContractError(f"{LEVEL_CAP_ENV} must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ContractError(f"{LEVEL_CAP_ENV} must be nonnegative, got {cap}")
    return cap


def check_level(level) -> int:
    if isinstance(level, bool) or not isinstance(level, (int, np.integer)):
        raise ContractError(f"level must be an integer, got {level!r}")
    level = int(level)
    cap = level_cap()
    if not 0 <= level <= cap:
        raise ContractError(f"level {level} outside [0, {cap}]")
    return level


def ball_measure(level: int) -> float:
    return 2.0 ** -level


@dataclass(frozen=True)
class BallIndex:
    """The ball ``value + 2**level Z_2``."""

    value: int
    level: int

    def __post_init__(self):
        lv = check_level(self.level)
        object.__setattr__(self, "level", lv)
        v = int(self.value)
        if not 0 <= v < 2 ** lv:
            raise ContractError(f"ball index {v} outside [0, 2**{lv})")
        object.__setattr__(self, "value", v)

    def bits(self) -> tuple[int, ...]:
        """Binary digits ``I_0, ..., I_{l-1}`` with ``I = sum I_k 2**k``."""
        return tuple((self.value >> k) & 1 for k in range(self.level))

    @property
    def measure(self) -> float:
        return ball_measure(self.level)


def _trailing_zeros(x: int, cap: int) -> int:
    if x == 0:
        return cap
    return (x & -x).bit_length() - 1


def valuation2(i: BallIndex, j: BallIndex) -> int:
    """2-adic order of ``i - j`` read modulo ``2**l``; equals ``l`` iff ``i == j``."""
    if i.level != j.level:
        raise ContractError(f"level mismatch: {i.level} vs {j.level}")
    residue = (i.value - j.value) % (1 << i.level)
    return _trailing_zeros(residue, i.level)


def ultra_distance(i: BallIndex, j: BallIndex) -> float:
    """2-adic distance between two balls, floored at the level resolution ``2**-l``."""
    return 2.0 ** -valuation2(i, j)


def valuation_matrix(indices: Sequence[int], level: int) -> np.ndarray:
    """Pairwise valuations of ``indices`` (integer residues at ``level``)."""
    level = check_level(level)
    idx = np.asarray(indices, dtype=np.int64)
    diff = (idx[:, None] - idx[None, :]) % (1 << level)
    out = np.full(diff.shape, level, dtype=np.int64)
    nz = diff != 0
    low = diff[nz] & -diff[nz]
    out[nz] = np.log2(low).astype(np.int64)
    return out


def refine_indices(i: BallIndex, r: int) -> list[BallIndex]:
    """Sub-balls of ``i`` at the finer level ``r``, ascending."""
    r = check_level(r)
    if r < i.level:
        raise ContractError(f"cannot refine level {i.level} to coarser level {r}")
    step = 1 << i.level
    return [BallIndex(i.value + c * step, r) for c in range(1 << (r - i.level))]


@dataclass(frozen=True)
class SupportSet:
    """A union of level-``level`` balls, given by strictly ascending residues."""

    level: int
    indices: tuple[int, ...]

    def __post_init__(self):
        lv = check_level(self.level)
        object.__setattr__(self, "level", lv)
        idx = tuple(int(v) for v in self.indices)
        if not idx:
            raise ContractError("support set must be nonempty")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ContractError("support indices must be strictly ascending without duplicates")
        if idx[0] < 0 or idx[-1] >= 1 << lv:
            raise ContractError(f"support index outside [0, 2**{lv})")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def full(cls, level: int) -> "SupportSet":
        level = check_level(level)
        return cls(level, tuple(range(1 << level)))

    @classmethod
    def from_iterable(cls, level: int, indices: Iterable[int]) -> "SupportSet":
        return cls(level, tuple(sorted(set(int(v) for v in indices))))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, value) -> bool:
        return int(value) in self._positions

    @property
    def _positions(self) -> dict[int, int]:
        pos = self.__dict__.get("_pos")
        if pos is None:
            pos = {v: k for k, v in enumerate(self.indices)}
            object.__setattr__(self, "_pos", pos)
        return pos

    def position(self, value: int) -> int:
        try:
            return self._positions[int(value)]
        except KeyError:
            raise ContractError(f"index {value} not in support at level {self.level}") from None

    def balls(self) -> list[BallIndex]:
        return [BallIndex(v, self.level) for v in self.indices]

    @property
    def measure(self) -> float:
        return len(self.indices) * ball_measure(self.level)

    def is_full(self) -> bool:
        return len(self.indices) == 1 << self.level

    def refine(self, r: int) -> "SupportSet":
        """The same compact set covered by level-``r`` balls."""
        r = check_level(r)
        if r < self.level:
            raise ContractError(f"cannot refine level {self.level} to coarser level {r}")
        step = 1 << self.level
        fine = sorted(v + c * step for v in self.indices for c in range(1 << (r - self.level)))
        return SupportSet(r, tuple(fine))

    def coarsen(self, l: int) -> "SupportSet":
        """Level-``l`` balls that meet this set."""
        l = check_level(l)
        if l > self.level:
            raise ContractError(f"cannot coarsen level {self.level} to finer level {l}")
        mask = (1 << l) - 1
        return SupportSet.from_iterable(l, (v & mask for v in self.indices))

    def parent_positions(self, coarse: "SupportSet") -> np.ndarray:
        """Position in ``coarse`` of the parent ball of each index of ``self``."""
        if coarse.level > self.level:
            raise ContractError("coarse support is finer than this support")
        mask = (1 << coarse.level) - 1
        return np.array([coarse.position(v & mask) for v in self.indices], dtype=np.int64)
