"""Refinement of a level-l model and the numerical scaling-limit study.

For a kernel that is constant on pairs of level-``l`` balls, its matrix on
X_r (``r >= l``) is obtained by copying each kernel entry onto the
``2**(r-l) x 2**(r-l)`` grid of sub-ball pairs with weight ``2**(l-r)``; the
loss rates and the potential are pointwise functions and do not change.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError
from .evolution import propagate
from .functions import TestFunction, embed, projection_residual, restrict, sample_function, to_level
from .model import ModelSpec
from .operators import HermitianHamiltonian, assemble
from .padic import BallIndex, check_level


def refine_rates(W: np.ndarray, d: np.ndarray, parents: np.ndarray, dl: int):
    """Rate form on the fine support whose ball ``k`` sits inside coarse ball ``parents[k]``."""
    Wr = np.asarray(W, float)[np.ix_(parents, parents)] * 2.0 ** -dl
    return Wr, np.asarray(d, float)[parents]


def refine_hamiltonian(model: ModelSpec, r: int) -> HermitianHamiltonian:
    """Matrix of the model's operator on X_r."""
    r = check_level(r)
    l = model.level
    if r < l:
        raise ContractError(f"cannot refine a level-{l} model to level {r}")
    if model.kind not in ("graph", "biweighted", "convolution"):
        raise ContractError(f"unsupported model kind {model.kind!r}")
    W, d = model.rate_form()
    if r == l:
        return assemble(model.support, W, d, model.kind, model.from_sampler)
    fine = model.support.refine(r)
    Wr, dr = refine_rates(W, d, fine.parent_positions(model.support), r - l)
    return assemble(fine, Wr, dr, model.kind, model.from_sampler)


@dataclass(frozen=True)
class RefinementReport:
    """Per-level outcome of :func:`convergence_study`.

    ``deviations[k]`` compares the level-``r`` propagation of ``P_r psi0``
    with the reference propagation of the same state; ``limit_errors[k]``
    compares it with the reference propagation of ``psi0`` itself, and is
    bounded by ``projection_residuals[k]``.
    """

    coarse_level: int
    fine_levels: tuple[int, ...]
    reference_level: int
    t: float
    deviations: tuple[float, ...]
    limit_errors: tuple[float, ...]
    projection_residuals: tuple[float, ...]
    approximate: bool = False

    def rows(self):
        return zip(self.fine_levels, self.deviations, self.limit_errors, self.projection_residuals)


def _initial_state(model: ModelSpec, psi0, level: int) -> TestFunction:
    support = model.support.refine(level)
    if isinstance(psi0, TestFunction):
        if psi0.level < model.level:
            raise ContractError(f"initial state level {psi0.level} is coarser than the model level {model.level}")
        if psi0.support != model.support.refine(psi0.level):
            psi0 = restrict(psi0, model.support.refine(psi0.level))
        return psi0
    if callable(psi0):
        return sample_function(psi0, support)
    raise ContractError("initial state must be a TestFunction or a callable sampler")


def convergence_study(model: ModelSpec, psi0: TestFunction | Callable[[BallIndex], complex],
                      t: float, r_list: Sequence[int], sample_level: int | None = None) -> RefinementReport:
    """Propagate ``P_r psi0`` under ``H^(r)`` for each ``r`` and compare.

    The reference dynamics is the propagation on the finest level involved,
    which coincides with the continuous evolution on that subspace because
    the model kernel is constant on pairs of level-``l`` balls.  A callable
    ``psi0`` is sampled at ``sample_level`` (default ``max(r_list) + 2``).
    """
    levels = [check_level(r) for r in r_list]
    if not levels:
        raise ContractError("r_list must not be empty")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ContractError("r_list must be strictly ascending")
    if levels[0] < model.level:
        raise ContractError(f"fine levels must be at least the model level {model.level}")
    if sample_level is None:
        sample_level = levels[-1] + 2 if callable(psi0) and not isinstance(psi0, TestFunction) else levels[-1]
    psi = _initial_state(model, psi0, check_level(sample_level))
    ref_level = max(levels[-1], psi.level)
    H_ref = refine_hamiltonian(model, ref_level)
    exact_ref = propagate(H_ref, embed(psi, ref_level), t)

    deviations, limit_errors, residuals = [], [], []
    for r in levels:
        psi_r = to_level(psi, r, model.support.refine(r))
        evolved = embed(propagate(refine_hamiltonian(model, r), psi_r, t), ref_level)
        ref_r = propagate(H_ref, embed(psi_r, ref_level), t)
        deviations.append((evolved - ref_r).norm())
        limit_errors.append((evolved - exact_ref).norm())
        residuals.append(projection_residual(psi, r))
    return RefinementReport(model.level, tuple(levels), ref_level, float(t), tuple(deviations),
                            tuple(limit_errors), tuple(residuals), model.from_sampler)
