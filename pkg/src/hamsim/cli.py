"""Command-line front end.

Subcommands: decompose, plan, simulate, sweep, demo {parity,bessel}, selftest.
Exit status is 0 on success, 1 when an input violates a precondition and 2
when an internal invariant fails.  Identical arguments produce identical
bytes when ``--omit-timing`` is given (wall-clock columns are written as 0).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .decompose import bipartite_double, decompose_full
from .demos import (bessel_j, bessel_overlap, parity_decode, parity_overlap,
                    parity_overlap_closed_form)
from .hamiltonian import dense_of, load_coo, random_sparse, stats
from .linalg import ValidationError, make_rng, max_norm
from .pipeline import DEFAULT_SPLIT, SEGMENT_RULES, choose_gamma, plan, rows_to_csv, simulate_sparse, sweep

EXIT_OK, EXIT_VALIDATION, EXIT_INTERNAL = 0, 1, 2
DEMO_COLUMNS = ("N", "t", "closed_form", "measured", "abs_diff")


class UsageError(ValidationError):
    """Bad command-line usage (unknown flag, missing argument)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage errors to exit status 1
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _split(text: str) -> tuple[float, float, float]:
    vals = _floats(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("the epsilon split needs three fractions")
    return tuple(vals)


def _load_hamiltonian(args):
    if args.input and args.random:
        raise ValidationError("give either --in or --random, not both")
    if args.input:
        try:
            with open(args.input) as fh:
                return load_coo(fh.read())
        except OSError as exc:
            raise ValidationError(f"cannot read {args.input}: {exc.strerror}") from exc
    if args.random:
        n, d = args.random
        return random_sparse(n, d, args.seed)
    raise ValidationError("an input Hamiltonian is required (--in FILE or --random N D)")


def _add_input(p):
    p.add_argument("--in", dest="input", help="COO file (header 'n d', then 'row col re im')")
    p.add_argument("--random", nargs=2, type=int, metavar=("N", "D"),
                   help="use a random N-qubit D-sparse instance drawn from --seed")


def _add_common(p, timing=False):
    p.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")
    p.add_argument("--out", help="write output here instead of stdout")
    if timing:
        p.add_argument("--omit-timing", action="store_true",
                       help="write wall-clock fields as 0 so repeated runs are byte-identical")


def _add_budget(p):
    p.add_argument("--split", type=_split, default=DEFAULT_SPLIT,
                   help="fractions of epsilon for rounding, product formula and segments")
    p.add_argument("--segment-rule", choices=SEGMENT_RULES, default="segments",
                   help="how the segment budget is shared between truncated segments")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hamsim", description="Sparse Hamiltonian simulation by fractional queries.")
    parser.add_argument("--version", action="version", version=f"hamsim {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("decompose", help="split a Hamiltonian into signed-permutation terms")
    _add_input(p)
    _add_common(p)
    p.add_argument("--gamma", type=float, help="rounding scale (default: derived from --eps and --t)")
    p.add_argument("--eps", type=float, default=1e-2)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--classes", action="store_true",
                   help="emit compact per-class tables instead of the full term list")

    p = sub.add_parser("plan", help="formula-level resource plan")
    p.add_argument("--d", type=int, required=True, help="sparsity")
    p.add_argument("--hmax", type=float, required=True, help="largest entry magnitude")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out")
    _add_budget(p)

    p = sub.add_parser("simulate", help="compile, execute and measure one simulation")
    _add_input(p)
    _add_common(p, timing=True)
    _add_budget(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--backend", choices=("compiled", "python"), help="kernel backend override")

    p = sub.add_parser("sweep", help="simulate over a list of epsilons and write CSV")
    _add_input(p)
    _add_common(p, timing=True)
    _add_budget(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--eps", type=_floats, required=True, help="comma-separated epsilons")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("demo", help="lower-bound demonstrations")
    demo = p.add_subparsers(dest="demo", parser_class=_Parser)
    demo.required = True
    q = demo.add_parser("parity", help="parity chain overlap against |sin(t/N)|^N for N = 1..N")
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--t", type=_floats, default=[1.0], help="comma-separated times")
    q.add_argument("--out")
    q = demo.add_parser("bessel", help="Bessel walk overlap against |J_2N(t)| for N = 1..N")
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--t", type=_floats, default=[1.0], help="comma-separated times")
    q.add_argument("--W", type=int, default=40, help="truncation half-width")
    q.add_argument("--seed", type=int, default=0, help="seed for the input bit strings")
    q.add_argument("--out")

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.add_argument("--seed", type=int, default=0)
    return parser


# ----------------------------------------------------------------------------
# subcommands

def _emit(text: str, out: Optional[str]) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _phase_code(z: complex) -> str:
    """'+1', '-1', '+i', '-i' for a unit phase; '0' for an absent entry."""
    z = complex(z)
    if abs(z) < 0.5:
        return "0"
    if abs(z.real) >= abs(z.imag):
        return "+1" if z.real > 0 else "-1"
    return "+i" if z.imag > 0 else "-i"


def _cmd_decompose(args) -> int:
    h = _load_hamiltonian(args)
    st = stats(h)
    gamma = args.gamma if args.gamma is not None else choose_gamma(st.d, args.t, args.eps * DEFAULT_SPLIT[0])
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    terms = decompose_full(h, gamma)
    hb = bipartite_double(h)
    measured = max_norm(dense_of(hb) - terms.weighted_sum(gamma))
    out = {
        "n": h.n, "d": st.d, "max_norm": st.max_norm, "gamma": gamma, "eta": len(terms),
        "certified_max_norm_error": math.sqrt(2.0) * gamma * st.d ** 2,
        "measured_max_norm_error": measured,
    }
    if args.classes:
        out["classes"] = [{"tag": c.tag, "levels": int(c.max_level), "perm": [int(v) for v in c.perm],
                           "level": [int(v) for v in c.level],
                           "phase": [_phase_code(z) for z in c.phase]}
                          for c in terms.classes]
    else:
        out["terms"] = [{"tag": term.tag, "level": term.level, "sign": "+" if term.sign > 0 else "-",
                         "mapping": [[row, int(col), _phase_code(z)]
                                     for row, (col, z) in enumerate(zip(term.perm, term.phase))]}
                        for term in terms]
    _emit(_dumps(out), args.out)
    return EXIT_OK


def _cmd_plan(args) -> int:
    pl = plan(args.d, args.hmax, args.t, args.eps, args.split, args.segment_rule)
    _emit(_dumps(pl.to_dict()), args.out)
    return EXIT_OK


def _check_report(rep) -> None:
    if rep.discrete_queries != rep.predicted_queries:
        raise RuntimeError(f"query meter read {rep.discrete_queries}, plan predicted {rep.predicted_queries}")


def _cmd_simulate(args) -> int:
    h = _load_hamiltonian(args)
    _, rep = simulate_sparse(h, args.t, args.eps, split=args.split, segment_error_rule=args.segment_rule,
                             kernel_backend=args.backend)
    _check_report(rep)
    if args.omit_timing:
        rep.wall_time = 0.0
    _emit(rep.to_json(), args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    h = _load_hamiltonian(args)
    rows = sweep(h, args.t, args.eps, split=args.split, segment_error_rule=args.segment_rule)
    for row in rows:
        if row["queries_measured"] != row["queries_predicted"]:
            raise RuntimeError(f"query meter disagrees with the plan at epsilon {row['epsilon']}")
        if args.omit_timing:
            row["seconds"] = 0.0
    _emit(rows_to_csv(rows) if args.format == "csv" else _dumps(rows), args.out)
    return EXIT_OK


def _demo_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DEMO_COLUMNS)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _cmd_demo(args) -> int:
    if args.N < 1:
        raise ValidationError("--N must be at least 1")
    rows = []
    if args.demo == "parity":
        for N in range(1, args.N + 1):
            for t in args.t:
                closed, measured = parity_overlap_closed_form(N, t), parity_overlap(N, t)
                rows.append((N, t, closed, measured, abs(closed - measured)))
    else:
        rng = make_rng(args.seed)
        for N in range(1, args.N + 1):
            x = [int(b) for b in rng.integers(0, 2, N)]
            for t in args.t:
                closed, measured = abs(bessel_j(2 * N, t)), bessel_overlap(N, t, args.W, x)
                rows.append((N, t, closed, measured, abs(closed - measured)))
    _emit(_demo_csv(rows), args.out)
    return EXIT_OK


# ----------------------------------------------------------------------------
# selftest

def _check_gadgets(rng) -> float:
    from .fracquery import GadgetParams, gadget_circuit
    from .linalg import fractional_power, random_involution
    worst = 0.0
    for _ in range(10):
        q, a = random_involution(4, rng), float(rng.random())
        blk = gadget_circuit(q, a)[:4, :4]
        want = math.sqrt(GadgetParams(a).q) * np.exp(-1j * math.pi * a / 2) * fractional_power(q, a)
        worst = max(worst, float(np.max(np.abs(blk - want))))
    return worst


def _random_segment(rng, m=4, dim=2):
    from .fracquery import FractionalQueryProgram, build_segment
    from .linalg import random_involution, random_unitary
    alphas = rng.random(m)
    alphas *= 0.19 / alphas.sum()
    prog = FractionalQueryProgram([random_involution(dim, rng) for _ in range(m)], np.arange(m), alphas,
                                  [random_unitary(dim, rng) for _ in range(m + 1)])
    return build_segment(prog)


def _check_segment(rng) -> float:
    from .engine import materialize, qubit_label_wires, qubit_segment_circuit, zero_label_block
    spec = _random_segment(rng)
    circ = qubit_segment_circuit(spec)
    blk = zero_label_block(materialize(circ), circ.layout, qubit_label_wires(spec.m))
    return float(np.max(np.abs(blk - 0.5 * spec.target())))


def _check_oaa(rng) -> float:
    from .engine import ENCODED_LABELS, materialize, oaa_circuit, zero_label_block
    from .fracquery import approx_segment
    spec = _random_segment(rng)
    seg = approx_segment(spec, spec.m)
    amp = materialize(oaa_circuit(seg.circuit, ENCODED_LABELS))
    return float(np.linalg.norm(zero_label_block(amp, seg.circuit.layout, ENCODED_LABELS) - spec.target(), 2))


def _check_decomposition(rng) -> float:
    worst = 0.0
    for _ in range(3):
        h = random_sparse(2, 2, int(rng.integers(1 << 31)))
        gamma = 0.05
        terms = decompose_full(h, gamma)
        err = max_norm(dense_of(bipartite_double(h)) - terms.weighted_sum(gamma))
        worst = max(worst, err / (math.sqrt(2.0) * gamma * stats(h).d ** 2))
    return worst


def _check_end_to_end(rng) -> float:
    h = load_coo("1 1\n0 1 0.9 0\n")
    _, rep = simulate_sparse(h, 1.0, 1e-3)
    _check_report(rep)
    return rep.spectral_error / 1e-3


def _check_demos(rng) -> float:
    worst = max(abs(parity_overlap(N, 1.0) - parity_overlap_closed_form(N, 1.0)) for N in range(1, 7))
    worst = max(worst, max(parity_decode((1, 0, 1), 1.0).wrong_clean, abs(bessel_overlap(1, 1.0, 40) -
                abs(bessel_j(2, 1.0)))))
    return worst


SELFTESTS: list[tuple[str, Callable, float]] = [
    ("gadget zero-control block", _check_gadgets, 1e-12),
    ("segment amplitude one half", _check_segment, 1e-12),
    ("amplified exact segment", _check_oaa, 1e-10),
    ("decomposition error / certified bound", _check_decomposition, 1.0),
    ("one-qubit simulation error / epsilon", _check_end_to_end, 1.0),
    ("lower-bound demos", _check_demos, 1e-10),
]


def run_selftest(seed: int = 0, stream=None) -> bool:
    stream = stream or sys.stdout
    rng = make_rng(seed)
    ok_all = True
    for name, fn, tol in SELFTESTS:
        value = fn(rng)
        ok = value <= tol
        ok_all &= ok
        stream.write(f"{'PASS' if ok else 'FAIL'}  {name}: {value:.3e} (limit {tol:g})\n")
    return ok_all


def _cmd_selftest(args) -> int:
    return EXIT_OK if run_selftest(args.seed) else EXIT_INTERNAL


COMMANDS = {"decompose": _cmd_decompose, "plan": _cmd_plan, "simulate": _cmd_simulate,
            "sweep": _cmd_sweep, "demo": _cmd_demo, "selftest": _cmd_selftest}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except (RuntimeError, AssertionError, ArithmeticError) as exc:
        sys.stderr.write(f"internal invariant failed: {exc}\n")
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
