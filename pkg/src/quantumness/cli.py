"""Command-line front end: one seeded, reproducible batch run per invocation.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 a numerical
identity or bound failed its tolerance.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import beam, bell, phase_space, qtests
from .operator_core import (
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityState,
    HermitianOperator,
    NumericalError,
    ValidationError,
    operator_from_json,
)

SCHEMA_VERSION = "1"
OUTPUT_DIR_ENV = "QUANTUMNESS_OUTPUT_DIR"

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_TOLERANCE = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int = 42
    samples: int = 1_000_000
    cutoff: int = 30
    tol: float = 1e-6
    output: Optional[str] = None
    format: str = "json"


BUILTIN_OPERATORS = {
    "I": PAULI_I,
    "sx": PAULI_X,
    "sy": PAULI_Y,
    "sz": PAULI_Z,
    "sx+sz": PAULI_X + PAULI_Z,
    "proj0": np.diag([1.0, 0.0]),
}
BUILTIN_PAIRS = {"av": qtests.AV_PAIR}


def parse_operator(text: str, field: str) -> HermitianOperator:
    """``builtin:<name>``, ``@file.json`` or inline JSON matrix."""
    if text.startswith("builtin:"):
        name = text.split(":", 1)[1]
        if name not in BUILTIN_OPERATORS:
            raise ValidationError(f"{field}: unknown builtin operator {name!r} (have {', '.join(BUILTIN_OPERATORS)})")
        return HermitianOperator(BUILTIN_OPERATORS[name])
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise ValidationError(f"{field}: cannot read {text[1:]}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{field}: malformed JSON ({exc.msg} at char {exc.pos})") from None
    return operator_from_json(obj, path=f"{field}$")


def parse_pair(text: str):
    name = text.split(":", 1)[1] if text.startswith("builtin:") else None
    if name not in BUILTIN_PAIRS:
        raise ValidationError(f"--pair: unknown preset {text!r} (have builtin:{', builtin:'.join(BUILTIN_PAIRS)})")
    return BUILTIN_PAIRS[name]


def parse_vector(text: str, field: str, length: int = 3, kind=float):
    try:
        parts = [kind(x.strip().replace(" ", "")) for x in text.split(",")]
    except ValueError:
        raise ValidationError(f"{field}: expected {length} comma-separated numbers, got {text!r}") from None
    if len(parts) != length:
        raise ValidationError(f"{field}: expected {length} components, got {len(parts)}")
    return parts


def parse_fock_state(text: str, cutoff: int) -> DensityState:
    kind, _, arg = text.partition(":")
    try:
        if kind == "vacuum":
            return phase_space.vacuum_state(cutoff)
        if kind == "coherent":
            return phase_space.coherent_state(complex(arg or "1"), cutoff)
        if kind == "number":
            return phase_space.number_state(int(arg or "1"), cutoff)
        if kind == "thermal":
            return phase_space.thermal_state(float(arg or "0.5"), cutoff)
        if kind == "mixed":
            return DensityState.maximally_mixed(cutoff + 1)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"--state: bad argument {arg!r}") from None
    raise ValidationError(f"--state: unknown state {text!r} (vacuum, coherent:<beta>, number:<n>, thermal:<nbar>, mixed)")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _require(ok: bool, message: str, failures: list):
    if not ok:
        failures.append(message)


# -- subcommands -------------------------------------------------------------
# Each returns (result dict, csv rows or None, failures).


def cmd_qtest_a(args, cfg):
    a = parse_operator(args.A, "--A")
    b = parse_operator(args.B, "--B")
    c = parse_operator(args.C, "--C") if args.C else a + b
    report = qtests.qtest_a(a, b, c, tol=cfg.tol)
    return report.to_dict(), None, []


def cmd_qtest_b(args, cfg):
    if args.A or args.B:
        if not (args.A and args.B):
            raise ValidationError("--A and --B must be given together")
        a, b = parse_operator(args.A, "--A"), parse_operator(args.B, "--B")
    else:
        a, b = parse_pair(args.pair)
    report = qtests.qtest_b(a, b, tol=cfg.tol)
    failures = []
    if report.violating_state is not None:
        _require(abs(report.violation_gap + report.square_margin) <= 1e-9, "violating state gap != -square_margin", failures)
    return report.to_dict(), None, failures


def cmd_witness_search(args, cfg):
    res = qtests.witness_search(args.dim, cfg.seed, args.iterations, diagonal=args.diagonal)
    failures = []
    if args.diagonal or args.dim == 1:
        _require(res.square_margin >= -1e-9, "commuting pair violated the square order", failures)
    else:
        _require(res.square_margin < -0.01, "no witness with square_margin < -0.01 found", failures)
    out = {
        "dim": args.dim,
        "iterations": args.iterations,
        "diagonal": args.diagonal,
        "square_margin": res.square_margin,
        "evaluations": res.evaluations,
        "A": {"re": res.a.entries.real, "im": res.a.entries.imag},
        "B": {"re": res.b.entries.real, "im": res.b.entries.imag},
    }
    return out, None, failures


def cmd_minimality(args, cfg):
    a, b = parse_operator(args.A, "--A"), parse_operator(args.B, "--B")
    if args.states == "builtin:bloch-grid":
        states = qtests.bloch_ball_grid(args.grid)
    elif args.states == "builtin:mixed":
        states = [DensityState.maximally_mixed(a.dim)]
    else:
        try:
            items = json.loads(args.states)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"--states: malformed JSON ({exc.msg})") from None
        if not isinstance(items, list):
            raise ValidationError("--states$: expected a list of matrices")
        states = [DensityState(operator_from_json(m, f"--states$[{i}]").entries) for i, m in enumerate(items)]
    report = qtests.minimality_check(states, a, b)
    out = report.to_dict()
    out["n_states"] = len(states)
    return out, None, []


def cmd_bell_hvm(args, cfg):
    obs = bell.HVMObservable(args.a0, parse_vector(args.a, "--a"))
    r = bell.hvm_mean(obs, parse_vector(args.k, "--k"), cfg.samples, cfg.seed)
    failures = []
    _require(abs(r.analytic_mean - r.quantum_mean) <= 1e-12, "analytic HVM mean != Tr(rho A)", failures)
    _require(abs(r.mc_mean - r.analytic_mean) <= 4 * r.mc_sigma + 1e-12, "Monte Carlo mean outside 4 sigma", failures)
    return r.to_dict(), None, failures


def cmd_hvm_defect(args, cfg):
    obs_a = bell.HVMObservable(args.a0, parse_vector(args.a, "--a"))
    obs_b = bell.HVMObservable(args.b0, parse_vector(args.b, "--b"))
    k = parse_vector(args.k, "--k")
    defect = bell.hvm_additivity_defect(obs_a, obs_b, k, cfg.samples, cfg.seed)
    return {"defect": defect, "n_samples": cfg.samples, "seed": cfg.seed}, None, []


_BELL_STATES = {
    "singlet": lambda: bell.SINGLET,
    "mixed": lambda: DensityState.maximally_mixed(4),
}


def cmd_bchsh(args, cfg):
    if args.preset:
        name = args.preset.split(":", 1)[-1]
        if name != "tsirelson":
            raise ValidationError(f"--preset: unknown preset {args.preset!r} (have tsirelson)")
        setting = bell.TSIRELSON_SETTING
    else:
        setting = bell.BCHSHSetting(*(parse_vector(getattr(args, n), f"--{n}") for n in ("a1", "a2", "b1", "b2")))
    if args.state in _BELL_STATES:
        rho = _BELL_STATES[args.state]()
    else:
        try:
            rho = DensityState(operator_from_json(json.loads(args.state), "--state$").entries)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"--state: malformed JSON ({exc.msg})") from None
    value = bell.bchsh_value(rho, setting)
    failures = []
    _require(abs(value) <= bell.TSIRELSON + 1e-9, "|F| exceeds 2 sqrt 2", failures)
    out = {"value": value, "abs_value": abs(value), "tsirelson": bell.TSIRELSON, "classical_bound": 2,
           "setting": {k: list(v) for k, v in asdict(setting).items()}}
    return out, None, failures


def cmd_separable_scan(args, cfg):
    trials = args.trials or cfg.samples
    r = bell.separable_bound_scan(trials, cfg.seed)
    failures = []
    _require(r.max_abs <= 2 + 1e-9, "separable state exceeded |F| <= 2", failures)
    counts, edges = np.histogram(r.values, bins=args.bins, range=(-2.0, 2.0))
    rows = [("bin_lo", "bin_hi", "count")] + [
        (float(lo), float(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts)
    ]
    out = {"max_abs": r.max_abs, "n_trials": trials, "seed": cfg.seed,
           "histogram": {"edges": edges, "counts": counts}}
    return out, rows, failures


def cmd_qfunc(args, cfg):
    rho = parse_fock_state(args.state, cfg.cutoff)
    grid = phase_space.QuadratureGrid(args.radius, args.spacing)
    alpha, h = grid.points(cfg.cutoff)
    q = phase_space._q_values(rho.entries, alpha)
    rows = [("re", "im", "q")] + [
        (float(z.real), float(z.imag), float(v)) for z, v in zip(alpha.ravel(), q.ravel())
    ]
    norm = float(np.sum(q) * h * h / np.pi)
    failures = []
    _require(q.max() <= 1 + 1e-10 and q.min() >= -1e-10, "Q outside [0, 1]", failures)
    out = {"state": args.state, "cutoff": cfg.cutoff, "q_sup": float(q.max()), "normalization": norm,
           "grid_points": int(q.size), "spacing": h}
    return out, rows, failures


def cmd_pairing(args, cfg):
    rho = parse_fock_state(args.state, cfg.cutoff)
    sym = phase_space.p_symbol(args.symbol)
    grid = phase_space.QuadratureGrid(args.radius, args.spacing)
    r = phase_space.pairing_check(rho, sym, grid, tol=args.pairing_tol)
    failures = []
    _require(r.discrepancy <= args.pairing_tol, "quadrature and trace disagree", failures)
    out = r.to_dict()
    out["asymmetry"] = phase_space.asymmetry_report(rho, sym, grid).to_dict()
    out["symbol"] = sym.name
    return out, None, failures


def _xi(text):
    return beam.BeamAmplitude(*parse_vector(text, "--xi", 2, complex))


def cmd_beam_moments(args, cfg):
    a = parse_operator(args.A, "--A")
    r = beam.moment_check(a, _xi(args.xi), beam.TwoModeFock(cfg.cutoff))
    failures = []
    _require(r.within(), "beam moments disagree with the coherent-state formulas", failures)
    return r.to_dict(), None, failures


def cmd_crossover(args, cfg):
    a, b = parse_pair(args.pair)
    u = beam.minimal_direction(a, b)
    n_list = parse_vector(args.N, "--N", len(args.N.split(",")))
    table = beam.crossover_scan(a, b, u, n_list, total_cutoff=None if args.auto_cutoff else cfg.cutoff)
    failures = []
    for row in table.rows:
        _require(abs(row.margin - row.analytic_margin) <= 1e-8 * max(1.0, row.N ** 2) + row.tail_bound,
                 f"margin at N={row.N} disagrees with the quadratic", failures)
    if table.bracketed_root is not None:
        _require(abs(table.bracketed_root - table.n_star) <= 1e-6 * table.n_star, "bracketed root != N*", failures)
    rows = [("N", "margin", "term1", "term2")] + [(r.N, r.margin, r.term1, r.term2) for r in table.rows]
    out = table.to_dict()
    out["direction"] = u
    return out, rows, failures


def cmd_stokes(args, cfg):
    r = beam.stokes_reconstruct(_xi(args.xi), beam.TwoModeFock(cfg.cutoff))
    failures = []
    _require(abs(r.bloch.norm - 1) <= 1e-9, "|s| != 1 for a coherent beam", failures)
    _require(r.state_error <= 1e-9, "reconstructed state != xi xi^dag / N", failures)
    return r.to_dict(), None, failures


# -- parser --------------------------------------------------------------------

COMMANDS = {
    "qtest-a": (cmd_qtest_a, "Test A: with rho(A) + rho(B) = rho(C) for all states (C = A + B), "
                "check whether Sp(C) lies in the sum-set Sp(A) + Sp(B)."),
    "qtest-b": (cmd_qtest_b, "Test B: premise 0 <= rho(A) <= rho(B) for all states; look for a state "
                "sigma with sigma(A^2) > sigma(B^2), i.e. min eig(B^2 - A^2) < 0."),
    "witness-search": (cmd_witness_search, "Search pairs A = G1^H G1, B = A + G2^H G2 minimizing "
                       "min eig(B^2 - A^2); commuting (diagonal) pairs never go below zero."),
    "minimality": (cmd_minimality, "Minimality: does rho(A) <= rho(B) on the accessible states "
                   "imply B - A >= 0 on all states?"),
    "bell-hvm": (cmd_bell_hvm, "Qubit hidden-variable model p(m,n) = delta(n - k), F = a0 +- |a| by the "
                 "sign of (m + n).a; checks int p F = a0 + k.a = Tr(rho A)."),
    "hvm-defect": (cmd_hvm_defect, "Mean square of F_A + F_B - F_(A+B) in the hidden-variable model "
                   "(zero iff a and b are parallel)."),
    "bchsh": (cmd_bchsh, "F(rho) = rho(A1 B1) + rho(A1 B2) + rho(A2 B1) - rho(A2 B2); "
              "|F| <= 2 separable, <= 2 sqrt 2 in general."),
    "separable-scan": (cmd_separable_scan, "Max |F| over random separable states and settings; must stay "
                       "<= 2. CSV columns: bin_lo, bin_hi, count."),
    "qfunc": (cmd_qfunc, "Husimi function Q(alpha) = <alpha|rho|alpha> on a grid. CSV columns: re, im, q."),
    "pairing": (cmd_pairing, "Tr(rho A) = int d^2alpha Q(alpha) F(alpha) with A = int F(alpha) "
                "|alpha><alpha| d^2alpha."),
    "beam-moments": (cmd_beam_moments, "<Phi(xi), Gamma(A) Phi(xi)> = <xi, A xi> and "
                     "<Phi(xi), Gamma(A)^2 Phi(xi)> = <xi, A xi>^2 + <xi, A^2 xi>."),
    "crossover": (cmd_crossover, "margin(N) = <Gamma(B)^2> - <Gamma(A)^2> = N^2 term + N term along the "
                  "minimal direction. CSV columns: N, margin, term1, term2."),
    "stokes": (cmd_stokes, "Stokes parameters S_mu = <Gamma(sigma_mu)> of a coherent beam and the "
               "Bloch vector (S1, S2, S3) / S0."),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quantumness", description="Quantumness tests, hidden-variable models and beam analysis.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--samples", type=int, default=1_000_000)
    common.add_argument("--cutoff", type=int, default=30)
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--output", "-o", help=f"output file (relative paths go under ${OUTPUT_DIR_ENV} if set)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    subs = {}
    for name, (_, text) in COMMANDS.items():
        subs[name] = sub.add_parser(name, parents=[common], help=text, description=text)

    p = subs["qtest-a"]
    p.add_argument("--A", default="builtin:sx")
    p.add_argument("--B", default="builtin:sz")
    p.add_argument("--C", help="defaults to A + B")
    p = subs["qtest-b"]
    p.add_argument("--pair", default="builtin:av")
    p.add_argument("--A")
    p.add_argument("--B")
    p = subs["witness-search"]
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--iterations", type=int, default=2000)
    p.add_argument("--diagonal", action="store_true")
    p = subs["minimality"]
    p.add_argument("--A", default="builtin:proj0")
    p.add_argument("--B", default='{"dim": 2, "re": [[1, 1], [1, 1]]}')
    p.add_argument("--states", default="builtin:mixed", help="builtin:mixed, builtin:bloch-grid or a JSON list")
    p.add_argument("--grid", type=int, default=5)
    p = subs["bell-hvm"]
    p.add_argument("--a0", type=float, default=0.0)
    p.add_argument("--a", default="0,0,1")
    p.add_argument("--k", default="0,0,1")
    p = subs["hvm-defect"]
    p.add_argument("--a0", type=float, default=0.0)
    p.add_argument("--a", default="1,0,0")
    p.add_argument("--b0", type=float, default=0.0)
    p.add_argument("--b", default="0,0,1")
    p.add_argument("--k", default="0,0,1")
    p = subs["bchsh"]
    p.add_argument("--preset", help="builtin:tsirelson (or tsirelson)")
    for n, d in (("a1", "0,0,1"), ("a2", "1,0,0"), ("b1", "0,0,1"), ("b2", "1,0,0")):
        p.add_argument(f"--{n}", default=d)
    p.add_argument("--state", default="singlet", help="singlet, mixed or a JSON 4x4 matrix")
    p = subs["separable-scan"]
    p.add_argument("--trials", type=int, help="defaults to --samples")
    p.add_argument("--bins", type=int, default=40)
    for name in ("qfunc", "pairing"):
        p = subs[name]
        p.add_argument("--state", default="vacuum", help="vacuum, coherent:<beta>, number:<n>, thermal:<nbar>, mixed")
        p.add_argument("--radius", type=float)
        p.add_argument("--spacing", type=float, default=phase_space.DEFAULT_SPACING)
    subs["pairing"].add_argument("--symbol", default="number", choices=sorted(phase_space.SYMBOLS))
    subs["pairing"].add_argument("--pairing-tol", type=float, default=phase_space.PAIRING_TOL)
    p = subs["beam-moments"]
    p.add_argument("--A", default="builtin:sx")
    p.add_argument("--xi", default="1,0", help="two complex amplitudes, e.g. 1,0.5j")
    p = subs["crossover"]
    p.add_argument("--pair", default="builtin:av")
    p.add_argument("--N", default="0.01,0.03,0.1,0.3,1,3,10,30,100")
    p.add_argument("--fixed-cutoff", dest="auto_cutoff", action="store_false",
                   help="use --cutoff instead of sizing it to max N")
    p = subs["stokes"]
    p.add_argument("--xi", default="1,0")
    return parser


def _render(cfg: RunConfig, result, rows, failures) -> str:
    if cfg.format == "csv":
        if rows is None:
            raise ValidationError(f"{cfg.command} has no CSV output; use --format json")
        buf = io.StringIO()
        buf.write(f"# schema_version={SCHEMA_VERSION} command={cfg.command} seed={cfg.seed} cutoff={cfg.cutoff}")
        if isinstance(result, dict) and "tail_bound" in result:
            buf.write(f" tail_bound={result['tail_bound']!r}")
        buf.write("\n")
        writer = csv.writer(buf, lineterminator="\n")
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
        return buf.getvalue()
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command,
        "config": asdict(cfg),
        "result": result,
        "passed": not failures,
        "failures": failures,
    }
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _output_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in COMMANDS and not argv[0].startswith("-"):
        parser.print_usage(sys.stderr)
        if argv:
            print(f"quantumness: unknown command {argv[0]!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    cfg = RunConfig(args.command, args.seed, args.samples, args.cutoff, args.tol, args.output, args.format)
    handler = COMMANDS[args.command][0]
    try:
        result, rows, failures = handler(args, cfg)
        text = _render(cfg, result, rows, failures)
    except ValidationError as exc:
        print(f"quantumness {cfg.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"quantumness {cfg.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    if cfg.output:
        path = _output_path(cfg.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)
    for msg in failures:
        print(f"quantumness {cfg.command}: FAILED: {msg}", file=sys.stderr)
    return EXIT_TOLERANCE if failures else EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
