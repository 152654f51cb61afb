"""Hamiltonians and generators on X_l.

Every Hamiltonian built here has the rate form ``H = -W + diag(d)``: ``W``
is the matrix of the integral kernel on X_l (entries are rates, 1/time) and
``d`` collects the loss rates plus the potential.  Keeping the two parts
apart is what lets :mod:`padic_ctqw.scaling` refine a model to finer levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import ContractError
from .padic import BallIndex, SupportSet, check_level, valuation_matrix

SYMMETRY_TOL = 1e-12
PROFILE_MASS_TOL = 1e-12
KINDS = ("graph", "biweighted", "convolution")


def _readonly(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _square(name: str, a: np.ndarray, n: int) -> None:
    if a.shape != (n, n):
        raise ContractError(f"{name} has shape {a.shape}, expected ({n}, {n})")


def _asymmetry(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.T))) if a.size else 0.0


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    support: SupportSet
    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries)
        n = len(self.support)
        _square("adjacency", a, n)
        if not np.all((a == 0) | (a == 1)):
            raise ContractError("adjacency entries must be 0 or 1")
        if not np.array_equal(a, a.T):
            i, j = np.argwhere(a != a.T)[0]
            raise ContractError(f"adjacency is not symmetric at ({i}, {j})")
        object.__setattr__(self, "entries", _readonly(a, np.int64))

    @classmethod
    def from_edges(cls, support: SupportSet, edges) -> "AdjacencyMatrix":
        """Edges are pairs of support index values; ``(I, I)`` is a self-loop."""
        a = np.zeros((len(support),) * 2, dtype=np.int64)
        for u, v in edges:
            p, q = support.position(u), support.position(v)
            a[p, q] = a[q, p] = 1
        return cls(support, a)

    @property
    def degrees(self) -> np.ndarray:
        """``gamma_I``, the row sums (a self-loop counts once)."""
        return self.entries.sum(axis=1)

    @property
    def valences(self) -> np.ndarray:
        """Number of neighbours other than the vertex itself."""
        return self.degrees - np.diag(self.entries)

    def __eq__(self, other):
        return (isinstance(other, AdjacencyMatrix) and self.support == other.support
                and np.array_equal(self.entries, other.entries))


@dataclass(frozen=True, eq=False)
class BiWeights:
    """Outward (``A``) and inward (``B``) flux rates between the balls of a support."""

    support: SupportSet
    A: np.ndarray
    B: np.ndarray
    from_sampler: bool = False

    def __post_init__(self):
        n = len(self.support)
        for name in ("A", "B"):
            m = np.array(getattr(self, name), dtype=float)
            _square(name, m, n)
            if not np.all(np.isfinite(m)):
                raise ContractError(f"{name} has non-finite entries")
            if np.any(m < 0):
                i, j = np.argwhere(m < 0)[0]
                raise ContractError(f"{name} has a negative entry at ({i}, {j})")
            asym = _asymmetry(m)
            if asym > SYMMETRY_TOL:
                raise ContractError(f"{name} is not symmetric (defect {asym:.3g})")
            object.__setattr__(self, name, _readonly(m))

    @property
    def gamma_A(self) -> np.ndarray:
        return self.A.sum(axis=1)

    @property
    def gamma_B(self) -> np.ndarray:
        return self.B.sum(axis=1)

    @property
    def potential(self) -> np.ndarray:
        """``gamma_B - gamma_A``, the potential induced by the weights."""
        return self.gamma_B - self.gamma_A

    def satisfies_hypothesis(self, tol: float = 0.0) -> bool:
        """Entrywise ``A <= B``, the discrete form of ``j(x|y) <= j(y|x)``."""
        return bool(np.all(self.A <= self.B + tol))

    def __eq__(self, other):
        return (isinstance(other, BiWeights) and self.support == other.support
                and np.array_equal(self.A, other.A) and np.array_equal(self.B, other.B))


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """A radial density ``J`` on Z_2 that is constant below ``2**-level``.

    ``shell_values[v]`` is the value of ``J`` on the sphere ``|z|_2 = 2**-v``
    and ``deep_value`` its value on the ball ``|z|_2 <= 2**-level``.
    """

    level: int
    shell_values: tuple[float, ...]
    deep_value: float

    def __post_init__(self):
        lv = check_level(self.level)
        shells = tuple(float(x) for x in self.shell_values)
        if len(shells) != lv:
            raise ContractError(f"profile needs {lv} shell values, got {len(shells)}")
        deep = float(self.deep_value)
        if any(x < 0 or not np.isfinite(x) for x in shells + (deep,)):
            raise ContractError("profile values must be finite and nonnegative")
        object.__setattr__(self, "level", lv)
        object.__setattr__(self, "shell_values", shells)
        object.__setattr__(self, "deep_value", deep)
        mass = self.mass
        if abs(mass - 1.0) > PROFILE_MASS_TOL:
            raise ContractError(f"profile mass is {mass!r}, must integrate to 1")

    @property
    def mass(self) -> float:
        return float(sum(j * 2.0 ** (-v - 1) for v, j in enumerate(self.shell_values))
                     + self.deep_value * 2.0 ** -self.level)

    def __call__(self, distance: float) -> float:
        """Value of ``J`` at a point of norm ``distance`` (a power of two)."""
        if distance <= 2.0 ** -self.level:
            return self.deep_value
        v = int(round(-np.log2(distance)))
        if v < 0:
            raise ContractError(f"profile is supported on Z_2, got norm {distance}")
        return self.shell_values[v]

    @classmethod
    def uniform(cls, level: int) -> "RadialProfile":
        return cls(level, (1.0,) * level, 1.0)

    def __eq__(self, other):
        return (isinstance(other, RadialProfile) and self.level == other.level
                and self.shell_values == other.shell_values and self.deep_value == other.deep_value)


@dataclass(frozen=True, eq=False)
class HermitianHamiltonian:
    support: SupportSet
    matrix: np.ndarray
    kind: str
    from_sampler: bool = False

    def __post_init__(self):
        h = np.array(self.matrix, dtype=float)
        _square("Hamiltonian", h, len(self.support))
        defect = _asymmetry(h)
        if defect > SYMMETRY_TOL:
            raise ContractError(f"Hamiltonian is not symmetric (defect {defect:.3g})")
        object.__setattr__(self, "matrix", _readonly(h))

    @property
    def level(self) -> int:
        return self.support.level

    @cached_property
    def spectral(self):
        from .evolution import spectral_decompose

        return spectral_decompose(self)


def assemble(support: SupportSet, kernel: np.ndarray, diagonal: np.ndarray, kind: str,
             from_sampler: bool = False) -> HermitianHamiltonian:
    """``-kernel + diag(diagonal)`` as a Hamiltonian."""
    return HermitianHamiltonian(support, -np.asarray(kernel, float) + np.diag(diagonal), kind, from_sampler)


def _potential(V, n: int) -> np.ndarray:
    if V is None:
        return np.zeros(n)
    V = np.asarray(V, dtype=float).reshape(-1)
    if V.size != n:
        raise ContractError(f"potential has {V.size} entries for {n} vertices")
    return V


def graph_rates(adj: AdjacencyMatrix, m: float = 1.0, V=None):
    if not m > 0:
        raise ContractError(f"mass must be positive, got {m}")
    W = m * adj.entries.astype(float)
    return W, m * adj.degrees.astype(float) + _potential(V, len(adj.support))


def graph_hamiltonian(adj: AdjacencyMatrix, m: float = 1.0, V=None) -> HermitianHamiltonian:
    """Farhi-Gutmann Hamiltonian ``-m J_G + V``.

    Off the diagonal ``H[J, I] = -m A[J, I]``; on it ``m val(I) + V_I``.
    """
    W, d = graph_rates(adj, m, V)
    return assemble(adj.support, W, d, "graph")


def biweighted_rates(w: BiWeights):
    return np.array(w.A), w.gamma_B


def biweighted_hamiltonian(w: BiWeights) -> HermitianHamiltonian:
    """``-A + diag(gamma_B)``, evolved as ``i dPsi/dt = H Psi``."""
    W, d = biweighted_rates(w)
    return assemble(w.support, W, d, "biweighted", w.from_sampler)


def convolution_matrix(profile: RadialProfile) -> np.ndarray:
    """Matrix of ``phi -> J * phi`` on D_l in the orthonormal ball basis."""
    l = profile.level
    table = np.array(profile.shell_values + (profile.deep_value,))
    v = valuation_matrix(range(1 << l), l)
    return table[v] * 2.0 ** -l


def convolution_rates(profile: RadialProfile, m: float = 1.0, V=None):
    if not m > 0:
        raise ContractError(f"mass must be positive, got {m}")
    C = convolution_matrix(profile)
    n = C.shape[0]
    return m * C, m * np.ones(n) + _potential(V, n)


def convolution_hamiltonian(profile: RadialProfile, m: float = 1.0, V=None) -> HermitianHamiltonian:
    """``-m (C - I) + diag(V)`` over the whole of G_l."""
    W, d = convolution_rates(profile, m, V)
    return assemble(SupportSet.full(profile.level), W, d, "convolution")


def hermiticity_defect(H) -> float:
    """``max |H[i, j] - H[j, i]|``; accepts a Hamiltonian or a bare matrix."""
    m = H.matrix if isinstance(H, HermitianHamiltonian) else np.asarray(H)
    return float(np.max(np.abs(m - m.T))) if m.size else 0.0


def discretize_kernel(sampler: Callable[[BallIndex, BallIndex], float], support: SupportSet,
                      symmetric: bool = True) -> np.ndarray:
    """Rate matrix of a kernel on ``support``.

    ``sampler(I, K)`` must return the average of the kernel over the product
    ball ``B(I) x B(K)``; the result is ``2**-l`` times that average, which
    puts the kernel in the ``2**l``-scaled indicator expansion used by
    :class:`BiWeights`.
    """
    balls = support.balls()
    avg = np.array([[float(sampler(i, k)) for k in balls] for i in balls])
    W = avg * 2.0 ** -support.level
    if symmetric:
        defect = _asymmetry(W)
        if defect > SYMMETRY_TOL:
            raise ContractError(f"kernel declared symmetric but has defect {defect:.3g}")
    return W


def ball_pair_average(kernel: Callable[[BallIndex, BallIndex], float], fine_level: int):
    """Turn a pointwise kernel into a ball-pair-average sampler.

    The kernel is evaluated on every pair of level-``fine_level`` sub-balls,
    which is exact whenever the kernel is constant on such pairs.
    """
    from .padic import refine_indices

    def sampler(i: BallIndex, k: BallIndex) -> float:
        xs = refine_indices(i, fine_level)
        ys = refine_indices(k, fine_level)
        return float(np.mean([[kernel(x, y) for y in ys] for x in xs]))

    return sampler


def vladimirov_constant(alpha: float) -> float:
    return (1.0 - 2.0 ** alpha) / (1.0 - 2.0 ** (-alpha - 1.0))


def vladimirov_indicator(alpha: float, x_norm: float) -> float:
    """``D^alpha`` of the indicator of Z_2, evaluated at a point of norm ``x_norm``."""
    if not alpha > 0:
        raise ContractError(f"alpha must be positive, got {alpha}")
    if not x_norm > 0:
        raise ContractError(f"x_norm must be a positive power of 2, got {x_norm}")
    k = np.log2(x_norm)
    if k != round(k):
        raise ContractError(f"x_norm must be a power of 2, got {x_norm}")
    c = vladimirov_constant(alpha)
    if x_norm <= 1:
        tail = 2.0 ** (-alpha - 1.0) / (1.0 - 2.0 ** -alpha)
        return -c * tail
    return c * x_norm ** (-alpha - 1.0)
