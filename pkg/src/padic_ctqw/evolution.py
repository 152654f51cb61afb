"""Unitary and heat-semigroup evolution on X_l."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericalContractError
from .functions import TestFunction
from .operators import BiWeights, HermitianHamiltonian, hermiticity_defect
from .padic import SupportSet

ORTHO_TOL = 1e-10
NORM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def propagator(self, t: float) -> np.ndarray:
        """``Q exp(-i t Lambda) Q^T``."""
        Q = self.eigenvectors
        return (Q * np.exp(-1j * t * self.eigenvalues)) @ Q.T

    def apply(self, coeffs: np.ndarray, t: float) -> np.ndarray:
        Q = self.eigenvectors
        return Q @ (np.exp(-1j * t * self.eigenvalues) * (Q.T @ coeffs))


def spectral_decompose(H: HermitianHamiltonian) -> SpectralDecomposition:
    """Eigen-decomposition of a real symmetric Hamiltonian.

    Eigenvalues ascend; every eigenvector is flipped so that its first
    component above ``1e-12`` in magnitude is positive.
    """
    defect = hermiticity_defect(H)
    if defect > 1e-12:
        raise ContractError(f"Hamiltonian is not Hermitian (defect {defect:.3g})")
    M = np.asarray(H.matrix, dtype=float)
    try:
        w, Q = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalContractError(f"eigensolver did not converge: {exc}") from exc
    Q = np.array(Q)
    for k in range(Q.shape[1]):
        col = Q[:, k]
        first = np.flatnonzero(np.abs(col) > 1e-12)
        if first.size and col[first[0]] < 0:
            Q[:, k] = -col
    n = M.shape[0]
    ortho = float(np.max(np.abs(Q.T @ Q - np.eye(n)))) if n else 0.0
    scale = max(float(np.max(np.abs(M))) if n else 0.0, 1.0)
    recon = float(np.max(np.abs((Q * w) @ Q.T - M))) if n else 0.0
    if ortho > ORTHO_TOL or recon > ORTHO_TOL * scale:
        raise NumericalContractError(
            f"eigendecomposition residuals too large (orthogonality {ortho:.3g}, "
            f"reconstruction {recon:.3g})", max(ortho, recon / scale))
    w.setflags(write=False)
    Q.setflags(write=False)
    return SpectralDecomposition(w, Q)


def _check_support(H: HermitianHamiltonian, psi: TestFunction) -> None:
    if psi.support != H.support:
        raise ContractError(
            f"state support (level {psi.level}, {len(psi.support)} balls) does not match "
            f"Hamiltonian support (level {H.level}, {len(H.support)} balls)")


def propagate(H: HermitianHamiltonian, psi0: TestFunction, t: float) -> TestFunction:
    """``exp(-i t H) psi0``."""
    _check_support(H, psi0)
    return psi0.with_coeffs(H.spectral.apply(psi0.coeffs, float(t)))


def propagator(H: HermitianHamiltonian, t: float) -> np.ndarray:
    return H.spectral.propagator(float(t))


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """``probs[I, J]`` is the probability of going from ``J`` to ``I`` in time ``t``."""

    t: float
    support: SupportSet
    probs: np.ndarray

    def column_defect(self) -> float:
        return float(np.max(np.abs(self.probs.sum(axis=0) - 1.0)))

    def column(self, index: int) -> np.ndarray:
        return self.probs[:, self.support.position(index)]


def transition_matrix(H: HermitianHamiltonian, t: float) -> TransitionMatrix:
    U = propagator(H, t)
    P = np.abs(U) ** 2
    P.setflags(write=False)
    return TransitionMatrix(float(t), H.support, P)


def born_transitions(psi_t: TestFunction, l: int, support: SupportSet | None = None) -> np.ndarray:
    """Probability that ``psi_t`` is found in each level-``l`` ball.

    ``support`` (default: the level-``l`` balls meeting ``psi_t.support``)
    must be tiled exactly by the fine support.
    """
    norm = psi_t.norm()
    if abs(norm - 1.0) > NORM_TOL:
        raise ContractError(f"state is not normalised (norm {norm!r})")
    if l > psi_t.level:
        raise ContractError(f"coarse level {l} is finer than the state level {psi_t.level}")
    if support is None:
        support = psi_t.support.coarsen(l)
    if support.refine(psi_t.level) != psi_t.support:
        raise ContractError("coarse support is not tiled by the state's support")
    parents = psi_t.support.parent_positions(support)
    out = np.zeros(len(support))
    np.add.at(out, parents, np.abs(psi_t.coeffs) ** 2)
    return out


# ---------------------------------------------------------------------------
# heat mode


@dataclass(frozen=True, eq=False)
class HeatGenerator:
    """Generator ``M`` of the master equation ``du/dtau = M u`` (Metzler)."""

    support: SupportSet
    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        n = len(self.support)
        if M.shape != (n, n):
            raise ContractError(f"generator has shape {M.shape}, expected ({n}, {n})")
        off = M - np.diag(np.diag(M))
        if np.any(off < -1e-15):
            i, j = np.argwhere(off < -1e-15)[0]
            raise ContractError(f"generator has a negative off-diagonal rate at ({i}, {j})")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    def column_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def is_substochastic(self, tol: float = 1e-12) -> bool:
        """Total mass can only decrease (every column sums to at most zero)."""
        return bool(np.all(self.column_sums() <= tol))


def heat_generator(w: BiWeights, check_hypothesis: bool = False) -> HeatGenerator:
    """``M = A - diag(gamma_B)``.

    With ``check_hypothesis`` the weights must satisfy ``A <= B`` entrywise,
    which makes the semigroup sub-stochastic.
    """
    if check_hypothesis and not w.satisfies_hypothesis():
        excess = float(np.max(w.A - w.B))
        raise NumericalContractError(f"weights violate A <= B (max excess {excess:.3g})", excess)
    return HeatGenerator(w.support, np.array(w.A) - np.diag(w.gamma_B))


def heat_generator_from_hamiltonian(H: HermitianHamiltonian) -> HeatGenerator:
    """``-H``, the master-equation generator whose Wick rotation gives ``H``."""
    return HeatGenerator(H.support, -np.asarray(H.matrix))


def expm_metzler(M: np.ndarray, tau: float, max_terms: int = 200) -> np.ndarray:
    """``exp(tau M)`` by scaling and squaring a Taylor series.

    The diagonal is shifted so the series runs over a nonnegative matrix;
    for Metzler ``M`` every partial sum is then entrywise nonnegative.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    shift = float(np.max(-np.diag(M))) if n else 0.0
    shift = max(shift, 0.0)
    X = tau * (M + shift * np.eye(n))
    norm = float(np.max(np.sum(np.abs(X), axis=0)))
    s = 0
    while norm / 2.0 ** s > 0.5:
        s += 1
    X = X / 2.0 ** s
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, max_terms + 1):
        term = term @ X / k
        E = E + term
        if np.max(np.abs(term)) < 1e-16 * np.max(np.abs(E)):
            break
    for _ in range(s):
        E = E @ E
    return E * np.exp(-tau * shift)


def heat_evolve(M: HeatGenerator, u0, tau: float) -> np.ndarray:
    """``exp(tau M) u0`` for a nonnegative initial density ``u0``."""
    tau = float(tau)
    if tau < 0:
        raise ContractError(f"tau must be nonnegative, got {tau}")
    u0 = np.asarray(u0, dtype=float).reshape(-1)
    if u0.size != len(M.support):
        raise ContractError(f"initial vector has {u0.size} entries for {len(M.support)} balls")
    if np.any(u0 < 0):
        raise ContractError("initial density must be nonnegative")
    return expm_metzler(M.matrix, tau) @ u0
