"""Locally constant test functions on a compact open subset of Z_2.

A level-``l`` test function is stored by its coefficients in the
orthonormal basis ``2**(l/2) * indicator(I + 2**l Z_2)``.  With this
normalisation the L2 inner product is the plain Euclidean one on the
coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ContractError
from .padic import BallIndex, SupportSet, check_level


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Element of D_l(Z_2) restricted to ``support`` (the space X_l)."""

    __test__ = False  # keep pytest from collecting this class

    level: int
    support: SupportSet
    coeffs: np.ndarray

    def __post_init__(self):
        lv = check_level(self.level)
        if self.support.level != lv:
            raise ContractError(f"support level {self.support.level} differs from function level {lv}")
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size != len(self.support):
            raise ContractError(f"{c.size} coefficients for a support of size {len(self.support)}")
        c.setflags(write=False)
        object.__setattr__(self, "level", lv)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_coeffs(cls, coeffs, level: int, support: SupportSet | None = None) -> "TestFunction":
        if support is None:
            support = SupportSet.full(level)
        return cls(level, support, coeffs)

    @classmethod
    def basis(cls, index: int, support: SupportSet) -> "TestFunction":
        c = np.zeros(len(support), dtype=complex)
        c[support.position(index)] = 1.0
        return cls(support.level, support, c)

    @classmethod
    def constant(cls, value: complex, support: SupportSet) -> "TestFunction":
        c = np.full(len(support), value * 2.0 ** (-support.level / 2), dtype=complex)
        return cls(support.level, support, c)

    def values(self) -> np.ndarray:
        """Pointwise value of the function on each ball of its support."""
        return self.coeffs * 2.0 ** (self.level / 2)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def norm_1(self) -> float:
        return float(np.sum(np.abs(self.values())) * 2.0 ** -self.level)

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.values())))

    def with_coeffs(self, coeffs) -> "TestFunction":
        return TestFunction(self.level, self.support, coeffs)

    def __sub__(self, other: "TestFunction") -> "TestFunction":
        _check_same_space(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __add__(self, other: "TestFunction") -> "TestFunction":
        _check_same_space(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __repr__(self):
        return f"TestFunction(level={self.level}, size={len(self.support)})"


def _check_same_space(f: TestFunction, g: TestFunction) -> None:
    if f.level != g.level or f.support != g.support:
        raise ContractError(
            f"functions live in different spaces (levels {f.level}/{g.level}, "
            f"support sizes {len(f.support)}/{len(g.support)})"
        )


def inner_product(f: TestFunction, g: TestFunction) -> complex:
    """L2 inner product, linear in ``f`` and conjugate-linear in ``g``."""
    _check_same_space(f, g)
    return complex(np.sum(f.coeffs * np.conj(g.coeffs)))


def project_average(f: TestFunction, l: int, support: SupportSet | None = None) -> TestFunction:
    """Average ``f`` over the balls of level ``l``.

    The coarse coefficient of ball ``I`` is ``2**((l - r)/2)`` times the sum
    of the fine coefficients inside ``I``.  ``support`` defaults to the
    level-``l`` balls meeting ``f.support`` and must cover it.
    """
    l = check_level(l)
    r = f.level
    if l > r:
        raise ContractError(f"cannot average level {r} function onto finer level {l}")
    if support is None:
        support = f.support.coarsen(l)
    elif support.level != l:
        raise ContractError(f"target support has level {support.level}, expected {l}")
    parents = f.support.parent_positions(support)
    out = np.zeros(len(support), dtype=complex)
    np.add.at(out, parents, f.coeffs)
    return TestFunction(l, support, out * 2.0 ** ((l - r) / 2))


def embed(f: TestFunction, r: int) -> TestFunction:
    """Rewrite ``f`` in the level-``r`` basis (an isometry)."""
    r = check_level(r)
    if r < f.level:
        raise ContractError(f"cannot embed level {f.level} function into coarser level {r}")
    fine = f.support.refine(r)
    parents = fine.parent_positions(f.support)
    return TestFunction(r, fine, f.coeffs[parents] * 2.0 ** ((f.level - r) / 2))


def to_level(f: TestFunction, r: int, support: SupportSet | None = None) -> TestFunction:
    """``P_r f``: average down when ``f`` is finer than ``r``, embed otherwise."""
    if f.level >= r:
        return project_average(f, r, support)
    g = embed(f, r)
    if support is not None and support != g.support:
        g = restrict(g, support)
    return g


def restrict(f: TestFunction, support: SupportSet) -> TestFunction:
    """Coefficients of ``f`` on a same-level ``support`` (zero off ``f.support``)."""
    if support.level != f.level:
        raise ContractError("restriction requires a support at the same level")
    c = np.zeros(len(support), dtype=complex)
    for k, v in enumerate(support.indices):
        if v in f.support:
            c[k] = f.coeffs[f.support.position(v)]
    return TestFunction(f.level, support, c)


def sample_function(sampler: Callable[[BallIndex], complex], support: SupportSet) -> TestFunction:
    """Level-``support.level`` test function taking ``sampler(ball)`` on each ball.

    This is exact for functions that are constant on the balls of the
    support; for anything else it is the caller's choice of fine level that
    controls the approximation.
    """
    vals = np.array([complex(sampler(b)) for b in support.balls()], dtype=complex)
    return TestFunction(support.level, support, vals * 2.0 ** (-support.level / 2))


def projection_residual(f: TestFunction, l: int) -> float:
    """``||f - P_l f||_2`` measured at the level of ``f``."""
    if l >= f.level:
        return 0.0
    back = embed(project_average(f, l), f.level)
    back = restrict(back, f.support)
    return (f - back).norm()
