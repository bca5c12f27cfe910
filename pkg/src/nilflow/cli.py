"""Command-line front end: reproducible runs over catalog or file groups.

Subcommands: reduce, integrate, lift, cut-time, analyze, catalog.

Group sources: a catalog name (``heisenberg``, ``f23``, ``f24``, ``n6_2_5a``,
``eng(n)`` — also spellable as two words, ``eng 2`` — or
``potential(F1; F2; ...)``) or a path to a group-spec file.

Group-spec grammar (one statement per line, ``#`` starts a comment)::

    dim = 3
    labels = X1 X2 Y1          # optional
    bracket 1 2 3 1            # [Z_1, Z_2] has coefficient 1 on Z_3
    bracket 1 2 3 -1/2         # coefficients are exact rationals
    splitting.y = 3
    splitting.x = 1 2
    splitting.n1 = 0

Exit codes: 0 ok; 2 parse error (spec files, names, parameters); 3 validation
error (algebra/splitting/dimension/energy preconditions); 4 numeric failure
(energy drift, non-finite state, quadrature grid); 5 analysis inconclusive
under ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction

import numpy as np

from . import analysis, catalog, dynamics
from .coords import Connection, compute_connection
from .lie_core import LieAlgebra, LieAlgebraError, Splitting, validate_algebra
from .poly import DimensionMismatch
from .reduction import SYMBOLIC, ReducedSystem, reduce as reduce_system


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


# ---------------------------------------------------------------------------
# group-spec files
# ---------------------------------------------------------------------------


def parse_group_spec(text: str) -> tuple[LieAlgebra, Splitting]:
    """Parse and fully validate a group-spec file; see the module docstring
    for the grammar."""
    dim: int | None = None
    labels: list[str] | None = None
    constants: dict[tuple[int, int], dict[int, Fraction]] = {}
    split_parts: dict[str, tuple[int, ...] | int] = {}

    def _int(tok: str, no: int, what: str) -> int:
        try:
            return int(tok)
        except ValueError:
            raise ParseError(no, f"{what} must be an integer, got {tok!r}") from None

    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "dim":
                dim = _int(value, no, "dim")
            elif key == "labels":
                labels = value.split()
            elif key in ("splitting.y", "splitting.x"):
                split_parts[key] = tuple(_int(t, no, key) for t in value.split())
            elif key == "splitting.n1":
                split_parts[key] = _int(value, no, key)
            else:
                raise ParseError(no, f"unknown assignment {key!r}")
            continue
        fields = line.split()
        if fields[0] != "bracket":
            raise ParseError(no, f"unknown statement {fields[0]!r}")
        if len(fields) != 5:
            raise ParseError(no, "bracket needs: bracket <a> <b> <c> <coeff>")
        a, b, c = (_int(t, no, "bracket index") for t in fields[1:4])
        try:
            coeff = Fraction(fields[4])
        except (ValueError, ZeroDivisionError):
            raise ParseError(no, f"bad coefficient {fields[4]!r}") from None
        if a >= b:
            raise ParseError(no, f"bracket indices must satisfy a < b, got {a} >= {b}")
        constants.setdefault((a, b), {})[c] = (
            constants.get((a, b), {}).get(c, Fraction(0)) + coeff
        )

    if dim is None:
        raise ParseError(0, "missing `dim = <n>`")
    for key in ("splitting.y", "splitting.x", "splitting.n1"):
        if key not in split_parts:
            raise ParseError(0, f"missing `{key} = ...`")

    alg = validate_algebra(constants, dim, labels)
    split = Splitting(
        y_indices=tuple(split_parts["splitting.y"]),
        x_indices=tuple(split_parts["splitting.x"]),
        n1=int(split_parts["splitting.n1"]),
    )
    from .lie_core import check_adapted_splitting

    check_adapted_splitting(alg, split)
    return alg, split


def resolve_group(tokens: list[str]) -> tuple[LieAlgebra, Splitting, str]:
    """Catalog name (possibly multi-token, e.g. ``eng 2``) or spec-file path."""
    joined = " ".join(tokens).strip()
    if len(tokens) == 1 and os.path.isfile(tokens[0]):
        with open(tokens[0]) as fh:
            alg, split = parse_group_spec(fh.read())
        return alg, split, os.path.basename(tokens[0])
    name = joined.replace(" ", "")
    m = re.fullmatch(r"(?i)eng\(?(\d+)\)?", name)
    if m:
        name = f"eng({m.group(1)})"
    entry = catalog.get(name)
    return entry.alg, entry.split, entry.name


# ---------------------------------------------------------------------------
# shared argument plumbing
# ---------------------------------------------------------------------------


def _parse_mu(text: str, m: int):
    if text.strip().lower() == SYMBOLIC:
        return SYMBOLIC
    try:
        values = tuple(Fraction(tok) for tok in text.split(","))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"--mu must be comma-separated rationals or 'symbolic', got {text!r}")
    if len(values) != m:
        raise DimensionMismatch(f"--mu has {len(values)} entries; the group needs {m}")
    return values


def _parse_vector(text: str, n: int, flag: str) -> list[float]:
    try:
        values = [float(Fraction(tok)) for tok in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"{flag} must be comma-separated numbers, got {text!r}")
    if len(values) == 1 and n > 1:
        values = values * n
    if len(values) != n:
        raise DimensionMismatch(f"{flag} has {len(values)} entries; expected {n}")
    return values


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _emit_json(payload: dict, out: str | None) -> None:
    payload.setdefault("schema", 1)
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", out)


def _write_trajectory(traj: dynamics.Trajectory, out: str | None, fmt: str) -> None:
    writer = {
        "csv": traj.write_csv,
        "json": traj.write_json,
        "gnuplot": traj.write_gnuplot,
    }[fmt]
    if out is None or out == "-":
        import contextlib
        import tempfile

        fd, path = tempfile.mkstemp(suffix=".traj")
        os.close(fd)
        try:
            writer(path)
            with open(path) as fh:
                sys.stdout.write(fh.read())
        finally:
            with contextlib.suppress(OSError):
                os.unlink(path)
    else:
        writer(out)


def _reduced_for(args) -> tuple[Connection, ReducedSystem, object, str]:
    alg, split, label = resolve_group(args.group)
    conn = compute_connection(alg, split)
    mu = _parse_mu(args.mu, conn.m)
    return conn, reduce_system(conn, mu), mu, label


def _integrated(args, conn: Connection, system: ReducedSystem):
    n = conn.n
    p0 = _parse_vector(args.p0, n, "--p0")
    x0 = _parse_vector(args.x0, n, "--x0")
    traj = dynamics.integrate_reduced(
        system,
        p0,
        x0,
        T=args.T,
        step=args.step,
        method=args.method,
        energy_tol=args.tol,
        record_every=args.record_every,
    )
    return p0, x0, traj


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_reduce(args) -> int:
    conn, system, mu, label = _reduced_for(args)
    if args.format == "json":
        payload = {
            "group": label,
            "dim": conn.alg.dim,
            "n": system.n,
            "n1": system.n1,
            "mu": SYMBOLIC if mu == SYMBOLIC else [str(v) for v in mu],
            "H": system.H.text(),
            "V": system.V.text(),
            "F": [f.text() for f in system.F_functions()],
        }
        if args.emit_connection:
            payload["connection"] = {
                "A": [[p.text() for p in row] for row in conn.A],
                "beta": [[p.text() for p in row] for row in conn.beta],
            }
        _emit_json(payload, args.out)
        return 0
    lines = [f"group: {label} (dim {conn.alg.dim}, n = {system.n}, n1 = {system.n1})"]
    lines.append(f"mu: {SYMBOLIC if mu == SYMBOLIC else ','.join(str(v) for v in mu)}")
    lines.append(f"H = {system.H.text()}")
    lines.append(f"V = {system.V.text()}")
    for i, f in enumerate(system.F_functions(), start=1):
        lines.append(f"F{i} = {f.text()}")
    if args.emit_connection:
        for i, row in enumerate(conn.A, start=1):
            lines.append(f"A{i} = ({', '.join(p.text() for p in row)})")
        for l, row in enumerate(conn.beta, start=1):
            lines.append(f"beta{l} = ({', '.join(p.text() for p in row)})")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_integrate(args) -> int:
    conn, system, mu, label = _reduced_for(args)
    if mu == SYMBOLIC:
        raise ValueError("integrate needs a numeric --mu")
    _, _, traj = _integrated(args, conn, system)
    _write_trajectory(traj, args.out, args.format)
    if args.out not in (None, "-"):
        drift = traj.energy_drift()
        print(
            f"{label}: {traj.times.size} samples on [0, {args.T}], "
            f"energy drift {drift:.3e} -> {args.out}"
        )
    return 0


def _cmd_lift(args) -> int:
    conn, system, mu, label = _reduced_for(args)
    if mu == SYMBOLIC:
        raise ValueError("lift needs a numeric --mu")
    _, _, reduced = _integrated(args, conn, system)
    theta0 = None
    if args.theta0 is not None:
        theta0 = _parse_vector(args.theta0, conn.m, "--theta0")
    full = dynamics.lift(reduced, conn, mu, theta0=theta0, tol=args.tol)
    _write_trajectory(full, args.out, args.format)
    if args.out not in (None, "-"):
        print(
            f"{label}: lifted {full.times.size} samples, "
            f"energy drift {full.energy_drift():.3e} -> {args.out}"
        )
    return 0


def _cmd_cut_time(args) -> int:
    conn, system, mu, label = _reduced_for(args)
    if mu == SYMBOLIC:
        raise ValueError("cut-time needs a numeric --mu")
    p0, x0, reduced = _integrated(args, conn, system)
    L = dynamics.detect_period(reduced, tol=args.period_tol, system=system)
    if L is None:
        report = dynamics.CutTimeReport(
            period=None,
            condition=None,
            bound=None,
            reason=f"no recurrence of the reduced orbit found on [0, {args.T}]",
        )
    else:
        theta0 = [0.0] * conn.m
        full_start = list(p0) + [float(v) for v in mu] + list(x0) + theta0
        report = dynamics.cut_time_bound(conn, full_start, L, tol=args.tol)
    if args.format == "json":
        payload = report.to_json_dict()
        payload["group"] = label
        _emit_json(payload, args.out)
        return 0
    lines = [f"group: {label}"]
    if report.period is None:
        lines.append(f"period: none detected ({report.reason})")
    else:
        lines.append(f"period: L = {report.period:.12g}")
        if report.bound is not None:
            lines.append(f"bound: t_cut <= {report.bound:.12g} via {report.condition}")
        else:
            lines.append(f"bound: none ({report.reason})")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _default_integrability_functions(label: str, conn: Connection):
    m = re.fullmatch(r"eng\((\d+)\)", label)
    if m:
        return analysis.engel_integrals(int(m.group(1))).all_functions()
    from .reduction import full_hamiltonian

    H = full_hamiltonian(conn)
    funcs = [("H", H)]
    for l in range(1, conn.m + 1):
        funcs.append((f"p_t{l}", H.space.var(f"p_t{l}")))
    return funcs


def _cmd_analyze(args) -> int:
    alg, split, label = resolve_group(args.group)
    conn = compute_connection(alg, split)
    inconclusive = False
    payload: dict = {"group": label}
    texts: list[str] = [f"group: {label}"]

    if args.integrability:
        funcs = _default_integrability_functions(label, conn)
        report = analysis.involution_and_independence(
            funcs, sample_count=args.samples, seed=args.seed, conn=conn
        )
        payload["integrability"] = report.to_json_dict()
        texts.append(f"integrability: {report.verdict}")
        texts.append(
            f"  family ({len(report.names)}): {', '.join(report.names)}"
        )
        texts.append(
            f"  involutive: {report.involutive}; rank {report.rank_target} at "
            f"{report.success_fraction:.0%} of {len(report.rank_samples)} samples"
        )
        for a, b, r in report.bracket_residuals:
            texts.append(f"  nonzero bracket {{{a}, {b}}} = {r.text()}")
        if not report.ok:
            inconclusive = True

    if args.metric_line:
        mu = _parse_mu(args.mu, conn.m)
        system = reduce_system(conn, mu)
        if mu == SYMBOLIC:
            raise ValueError("--metric-line needs a numeric --mu")
        p0, x0, reduced = _integrated(args, conn, system)
        verdict = analysis.metric_line_test(
            reduced, system, grid=args.grid, widen=args.widen
        )
        payload["metric_line"] = verdict.to_json_dict()
        texts.append(f"metric-line: {verdict.outcome}")
        texts.append(f"  {verdict.reason}")
        if verdict.outcome == "inconclusive":
            inconclusive = True
        if args.levelset_out:
            _write_levelset(system, reduced, args.grid, args.levelset_out)
            texts.append(f"  level-set samples -> {args.levelset_out}")

    if args.hill:
        mu = _parse_mu(args.mu, conn.m)
        system = reduce_system(conn, mu)
        if mu == SYMBOLIC:
            raise ValueError("--hill needs a numeric --mu")
        p0, x0, reduced = _integrated(args, conn, system)
        hill = analysis.hill_average(reduced, system)
        payload["hill"] = hill.to_json_dict()
        texts.append(
            f"hill average: s(T) = {hill.value:.9g}, "
            f"trailing sup {hill.limsup_estimate:.9g}"
        )

    if not (args.integrability or args.metric_line or args.hill):
        raise ValueError("analyze needs at least one of --integrability, --metric-line, --hill")

    if args.format == "json":
        _emit_json(payload, args.out)
    else:
        _emit("\n".join(texts) + "\n", args.out)
    return 5 if (inconclusive and args.strict) else 0


def _write_levelset(system: ReducedSystem, reduced: dynamics.Trajectory, grid: int, path: str) -> None:
    """Gnuplot-ready sample of the V = 1/2 level set near the orbit."""
    xs = reduced.x_block()
    lo, hi = xs.min(axis=0), xs.max(axis=0)
    center, half = 0.5 * (lo + hi), 0.5 * (hi - lo) * 1.25 + 0.5
    pts = analysis._level_samples(system, center - half, center + half, grid, 0.5, 1e-3)
    with open(path, "w") as fh:
        fh.write("# " + " ".join(f"x{i}" for i in range(1, system.n + 1)) + "\n")
        for row in np.atleast_2d(pts):
            if row.size:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def _cmd_catalog(args) -> int:
    if args.action == "list":
        entries = [catalog.get(name) for name in catalog.names()]
        if args.format == "json":
            _emit_json(
                {
                    "entries": [
                        {"name": e.name, "dim": e.dim, "note": e.note} for e in entries
                    ]
                },
                args.out,
            )
        else:
            width = max(len(e.name) for e in entries)
            lines = [f"{e.name:<{width}}  dim {e.dim:>2}  {e.note}" for e in entries]
            lines.append("eng(n), potential(F1; F2; ...) accept parameters")
            _emit("\n".join(lines) + "\n", args.out)
        return 0
    name = " ".join(args.name)
    m = re.fullmatch(r"(?i)eng\s*\(?(\d+)\)?", name.strip())
    if m:
        name = f"eng({m.group(1)})"
    entry = catalog.get(name)
    if args.action == "export":
        _emit(catalog.export_spec(entry), args.out)
        return 0
    # show
    if args.format == "json":
        _emit_json(
            {
                "name": entry.name,
                "dim": entry.dim,
                "note": entry.note,
                "golden": entry.golden,
                "mu_default": None
                if entry.mu_default is None
                else [str(v) for v in entry.mu_default],
                "spec": catalog.export_spec(entry),
            },
            args.out,
        )
    else:
        lines = [catalog.export_spec(entry).rstrip("\n")]
        if entry.golden:
            lines.append(f"# reduced H (symbolic a): {entry.golden}")
        _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_group_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "group",
        nargs="+",
        help="catalog name (heisenberg, f23, f24, n6_2_5a, eng(n), potential(...)) "
        "or path to a group-spec file",
    )


def _add_run_args(p: argparse.ArgumentParser, needs_start: bool = True) -> None:
    p.add_argument("--mu", default=SYMBOLIC, help="comma-separated rationals or 'symbolic'")
    if needs_start:
        p.add_argument("--p0", required=True, help="initial momentum, comma-separated")
        p.add_argument("--x0", required=True, help="initial position, comma-separated")
        p.add_argument("--T", type=float, default=10.0, help="time horizon")
        p.add_argument("--step", type=float, default=1e-3, help="integrator step")
        p.add_argument(
            "--method",
            choices=[dynamics.RK4, dynamics.IMPLICIT_MIDPOINT],
            default=dynamics.RK4,
        )
        p.add_argument("--record-every", type=int, default=1, metavar="K")
    p.add_argument("--tol", type=float, default=1e-6, help="energy-drift / lift tolerance")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="nilflow",
        description="Sub-Riemannian normal flows on metabelian Carnot groups: "
        "exact reductions, extremal integration, first-integral and "
        "metric-line analysis.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="closed-form reduced Hamiltonian and potentials")
    _add_group_arg(p)
    _add_run_args(p, needs_start=False)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument(
        "--emit-connection",
        action="store_true",
        help="also print the connection polynomials A_i, beta_l",
    )
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("integrate", help="integrate the reduced extremal flow")
    _add_group_arg(p)
    _add_run_args(p)
    p.add_argument("--format", choices=["csv", "json", "gnuplot"], default="csv")
    p.set_defaults(func=_cmd_integrate)

    p = sub.add_parser("lift", help="integrate and lift to a full normal extremal")
    _add_group_arg(p)
    _add_run_args(p)
    p.add_argument("--theta0", default=None, help="initial vertical coordinates")
    p.add_argument("--format", choices=["csv", "json", "gnuplot"], default="csv")
    p.set_defaults(func=_cmd_lift)

    p = sub.add_parser("cut-time", help="detect a period and bound the cut time")
    _add_group_arg(p)
    _add_run_args(p)
    p.add_argument("--period-tol", type=float, default=1e-4)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=_cmd_cut_time)

    p = sub.add_parser("analyze", help="first-integral and metric-line certificates")
    _add_group_arg(p)
    p.add_argument("--integrability", action="store_true")
    p.add_argument("--metric-line", action="store_true")
    p.add_argument("--hill", action="store_true")
    p.add_argument("--mu", default=SYMBOLIC)
    p.add_argument("--p0", default="0")
    p.add_argument("--x0", default="0")
    p.add_argument("--T", type=float, default=40.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument(
        "--method",
        choices=[dynamics.RK4, dynamics.IMPLICIT_MIDPOINT],
        default=dynamics.RK4,
    )
    p.add_argument("--record-every", type=int, default=1, metavar="K")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--widen", action="store_true", help="track every F_i, not just i <= n1")
    p.add_argument("--strict", action="store_true", help="exit 5 when inconclusive")
    p.add_argument("--levelset-out", default=None, metavar="PATH")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("catalog", help="list, show, or export built-in groups")
    p.add_argument("action", choices=["list", "show", "export"])
    p.add_argument("name", nargs="*", help="entry name (for show/export)")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=_cmd_catalog)

    return top


_PARSE_ERRORS = (ParseError, catalog.UnknownEntry, catalog.BadParameter)
_NUMERIC_ERRORS = (
    dynamics.EnergyDriftExceeded,
    dynamics.NonFiniteState,
    dynamics.GridTooCoarse,
    ArithmeticError,
    RuntimeError,
)
_VALIDATION_ERRORS = (
    LieAlgebraError,
    DimensionMismatch,
    analysis.NotUnitEnergy,
    analysis.PreconditionXNotAbelian,
    analysis.BadDimension,
    ValueError,
    KeyError,
)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "catalog" and args.action != "list" and not args.name:
        print("error: catalog show/export need an entry name", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except _PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
