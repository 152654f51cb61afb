"""Command line interface: ``padic-ctqw <command> ...``.

Exit status: 0 on success, 1 on invalid input, 2 on usage errors and 3 when
a computed quantity violates its numerical contract.
"""

from __future__ import annotations

import argparse
import io
import sys

import numpy as np

from .errors import ContractError, NumericalContractError
from .evolution import born_transitions, heat_evolve, propagate, transition_matrix
from .functions import TestFunction, embed
from .model import ModelSpec, parse_model
from .operators import vladimirov_indicator
from .padic import BallIndex, ultra_distance
from .scaling import convergence_study, refine_hamiltonian

CONTRACT_TOL = 1e-6


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def parse_grid(text: str) -> np.ndarray:
    """``start:end:steps`` (both ends included, ``steps`` intervals) or a single number."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        start, end, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:end:steps or a number, got {text!r}") from None
    if steps < 1:
        raise argparse.ArgumentTypeError(f"steps must be at least 1, got {steps}")
    return np.linspace(start, end, steps + 1)


def parse_levels(text: str) -> list[int]:
    """``a:b`` inclusive, or a comma separated list."""
    try:
        if ":" in text:
            a, b = (int(v) for v in text.split(":"))
            levels = list(range(a, b + 1))
        else:
            levels = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b or a comma separated list, got {text!r}") from None
    if not levels:
        raise argparse.ArgumentTypeError(f"empty level range {text!r}")
    return levels


def parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _emit(args, header: str, rows) -> None:
    buf = io.StringIO(newline="")
    buf.write(header + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _initial(model: ModelSpec, index: int | None) -> int:
    if index is None:
        return model.support.indices[0]
    if index not in model.support:
        raise ContractError(f"initial index {index} is not in the model support")
    return index


def cmd_transitions(args) -> None:
    model = parse_model(args.config)
    H = model.hamiltonian()
    sources = list(model.support) if args.initial is None else [_initial(model, args.initial)]
    rows = []
    for t in args.t:
        P = transition_matrix(H, t)
        defect = P.column_defect()
        if defect > CONTRACT_TOL:
            raise NumericalContractError(f"column sums deviate from 1 by {defect:.3g} at t={t}", defect)
        for j in sources:
            col = P.column(j)
            rows.extend((t, str(j), str(i), p) for i, p in zip(model.support, col))
    _emit(args, "t,from,to,prob", rows)


def cmd_evolve(args) -> None:
    model = parse_model(args.config)
    H = model.hamiltonian()
    psi0 = TestFunction.basis(_initial(model, args.initial), model.support)
    rows = []
    for t in args.t:
        psi = propagate(H, psi0, t)
        defect = abs(psi.norm() - 1.0)
        if defect > CONTRACT_TOL:
            raise NumericalContractError(f"norm drifted by {defect:.3g} at t={t}", defect)
        rows.extend((t, str(i), c.real, c.imag) for i, c in zip(model.support, psi.coeffs))
    _emit(args, "t,index,re,im", rows)


def cmd_heat(args) -> None:
    model = parse_model(args.config)
    M = model.heat_generator(check_hypothesis=args.check_substochastic)
    if args.check_substochastic and not M.is_substochastic():
        excess = float(np.max(M.column_sums()))
        raise NumericalContractError(f"generator is not sub-stochastic (column sum {excess:.3g})", excess)
    if args.u0 is not None:
        u0 = np.array(args.u0)
    else:
        u0 = np.zeros(len(model.support))
        u0[model.support.position(_initial(model, args.initial))] = 1.0
    rows = []
    for tau in args.tau:
        u = heat_evolve(M, u0, tau)
        if np.min(u) < -CONTRACT_TOL:
            raise NumericalContractError(f"negative density {np.min(u):.3g} at tau={tau}", -float(np.min(u)))
        rows.extend((tau, str(i), v) for i, v in zip(model.support, u))
    _emit(args, "t,index,value", rows)


def cmd_born(args) -> None:
    model = parse_model(args.config)
    r = model.level + 2 if args.fine_level is None else args.fine_level
    j = _initial(model, args.initial)
    Hr = refine_hamiltonian(model, r)
    psi0 = embed(TestFunction.basis(j, model.support), r)
    rows = []
    for t in args.t:
        probs = born_transitions(propagate(Hr, psi0, t), model.level, model.support)
        defect = abs(float(probs.sum()) - 1.0)
        if defect > CONTRACT_TOL:
            raise NumericalContractError(f"Born probabilities sum to 1{defect:+.3g} at t={t}", defect)
        rows.extend((t, str(j), str(i), p) for i, p in zip(model.support, probs))
    _emit(args, "t,from,to,prob", rows)


def cmd_scaling(args) -> None:
    model = parse_model(args.config)
    if args.initial is not None:
        psi0 = TestFunction.basis(_initial(model, args.initial), model.support)
    else:
        psi0 = _distance_profile(model, max(args.levels) + 2)
    report = convergence_study(model, psi0, args.t, args.levels)
    worst = max(report.deviations)
    if worst > CONTRACT_TOL:
        raise NumericalContractError(f"refined propagation deviates by {worst:.3g}", worst)
    rows = [(str(r), dev, lim, res) for r, dev, lim, res in report.rows()]
    _emit(args, "r,deviation,limit_error,projection_residual", rows)


def _distance_profile(model: ModelSpec, level: int) -> TestFunction:
    """Normalised state proportional to the distance to 0 (not locally constant near 0)."""
    from .functions import sample_function

    zero = BallIndex(0, level)
    f = sample_function(lambda b: ultra_distance(b, zero), model.support.refine(level))
    return f.with_coeffs(f.coeffs / f.norm())


def cmd_vladimirov(args) -> None:
    if args.max_norm < args.min_norm:
        raise ContractError("--max-norm must not be below --min-norm")
    norms = []
    k = int(np.log2(args.min_norm))
    while 2.0 ** k <= args.max_norm:
        norms.append(2.0 ** k)
        k += 1
    rows = [(a, x, vladimirov_indicator(a, x)) for a in args.alpha for x in norms]
    _emit(args, "alpha,norm,value", rows)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="padic-ctqw",
                                description="Quantum walks and Markov chains from 2-adic Schrodinger equations.")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def common(sp, time_flag="--t"):
        sp.add_argument("--config", required=True, help="model JSON file")
        sp.add_argument(time_flag, required=True, type=parse_grid, dest=time_flag.strip("-"),
                        help="time grid start:end:steps or a single time")
        sp.add_argument("--out", help="output CSV (default: stdout)")

    sp = sub.add_parser("transitions", help="CTQW transition probabilities pi_{I,J}(t)")
    common(sp)
    sp.add_argument("--initial", type=int, help="emit only the column of this starting ball")
    sp.set_defaults(func=cmd_transitions)

    sp = sub.add_parser("evolve", help="state coefficients psi(t) from a basis state")
    common(sp)
    sp.add_argument("--initial", type=int, help="starting ball (default: first of the support)")
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("heat", help="master-equation solution u(tau)")
    common(sp, "--tau")
    sp.add_argument("--initial", type=int, help="unit mass on this ball")
    sp.add_argument("--u0", type=parse_floats, help="initial density, comma separated")
    sp.add_argument("--check-substochastic", action="store_true",
                    help="require A <= B (mass can only decrease)")
    sp.set_defaults(func=cmd_heat)

    sp = sub.add_parser("born", help="Born-rule transition probabilities at the model level")
    common(sp)
    sp.add_argument("--initial", type=int, help="starting ball")
    sp.add_argument("--fine-level", type=int, help="level of the evolution (default: level + 2)")
    sp.set_defaults(func=cmd_born)

    sp = sub.add_parser("scaling", help="refinement study over a range of levels")
    sp.add_argument("--config", required=True)
    sp.add_argument("--levels", required=True, type=parse_levels, help="a:b inclusive")
    sp.add_argument("--t", required=True, type=float)
    sp.add_argument("--initial", type=int, help="use this basis state instead of the distance profile")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scaling)

    sp = sub.add_parser("vladimirov", help="closed form of D^alpha on the unit-ball indicator")
    sp.add_argument("--alpha", required=True, type=parse_floats)
    sp.add_argument("--max-norm", required=True, type=float)
    sp.add_argument("--min-norm", type=float, default=1.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_vladimirov)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except NumericalContractError as exc:
        print(f"padic-ctqw: numerical contract violation: {exc}", file=sys.stderr)
        return 3
    except ContractError as exc:
        print(f"padic-ctqw: {exc}", file=sys.stderr)
        return 1
    return 0
