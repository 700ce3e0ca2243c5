"""Command-line entry point: ``quasiwiener <subcommand> [options]``.

Subcommands
-----------
poisson    both sides of the Poisson summation formula for a Gaussian
comb       the Fourier pair of a lattice comb, as a JSON document
invert     eps-inverse (or reciprocal) of a serialized exponential sum
decompose  lattice-coset decomposition of a CSV point set or a serialized pair
cohere     coherence certificate and random inequality trials
plot       SVG/CSV spot diagram of one side of a serialized pair

Every JSON document carries a ``config`` echo with the seed. The exit status
is 0 when all checks pass, 1 when a check fails and 2 on malformed input.
"""

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from ._util import dumps, loads
from .coherence import certify, inequality_trials
from .decompose import decompose as run_decompose
from .decompose import detect_lattice_union, factor_measure, pair_from_points, spectral_parts, synthesize
from .errors import QuasiWienerError, WindowError
from .expsum import ExpSum
from .fourier_pair import FourierPair, pair_from_comb, poisson_sums
from .lattice import Coset, Lattice
from .measure import AtomicMeasure, read_points_csv
from .testfunctions import Gaussian
from .wiener_calculus import HolomorphicSymbol, compose, eps_inverse, torus_residuals

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Malformed command-line value or input file."""


@dataclass
class RunConfig:
    """Echo of a run: subcommand, paths, numeric parameters and seed."""

    command: str
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, val in self.params.items():
            if key.endswith("tol") and val is not None and not val > 0:
                raise InputError(f"tolerance {key!r} must be positive, got {val}")


# --- parsing helpers ----------------------------------------------------------------


def parse_lattice(text):
    """``Z``, ``Z2``, ``hex``, a scale like ``2`` or rows of basis vectors ``a,b;c,d``."""
    t = text.strip()
    if t in ("Z", "Z1"):
        return Lattice.integer(1)
    if t.startswith("Z") and t[1:].isdigit():
        return Lattice.integer(int(t[1:]))
    if t == "hex":
        return Lattice(np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]]))
    try:
        rows = [[float(v) for v in r.split(",")] for r in t.split(";")]
        B = np.array(rows, dtype=float)
    except ValueError:
        raise InputError(f"lattice: cannot parse {text!r}") from None
    if B.shape == (1, 1):
        return Lattice(B)
    if B.shape[0] != B.shape[1]:
        raise InputError(f"lattice: need d vectors of length d, got shape {B.shape}")
    return Lattice(B.T)


def parse_vector(text, dim, name):
    try:
        v = np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError:
        raise InputError(f"{name}: cannot parse {text!r}") from None
    if v.size == 1 and dim > 1:
        v = np.full(dim, v[0])
    if v.size != dim:
        raise InputError(f"{name}: expected {dim} components, got {v.size}")
    return v


def parse_coset(text):
    """``LATTICE[:SHIFT[:WEIGHT]]``."""
    parts = text.split(":")
    L = parse_lattice(parts[0])
    shift = parse_vector(parts[1], L.dim, "shift") if len(parts) > 1 and parts[1] else np.zeros(L.dim)
    try:
        weight = complex(parts[2]) if len(parts) > 2 else 1.0
    except ValueError:
        raise InputError(f"weight: cannot parse {parts[2]!r}") from None
    return Coset(L, shift), weight


def read_json(path):
    try:
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_document(path, kind):
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object")
    # documents written by this tool wrap the payload next to the config echo
    if kind in doc and isinstance(doc[kind], dict):
        doc = doc[kind]
    try:
        if kind == "expsum":
            return ExpSum.from_dict(doc)
        if kind == "pair":
            return FourierPair.from_dict(doc)
    except KeyError as exc:
        raise InputError(f"{path}: {kind} document is missing field {exc.args[0]!r}") from None
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    raise ValueError(kind)


def emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def document(config, payload, checks):
    ok = all(c["ok"] for c in checks.values())
    return {"config": asdict(config), "checks": checks, "ok": ok, **payload}, ok


def check(value, tol):
    return {"value": float(value), "tol": float(tol), "ok": bool(value <= tol)}


# --- subcommands ----------------------------------------------------------------------


def cmd_poisson(args, config):
    L = parse_lattice(args.lattice)
    center = parse_vector(args.center, L.dim, "center") if args.center else None
    phi = Gaussian.standard(L.dim, args.sigma, center)
    s = poisson_sums(phi, L, args.radius, args.dual_radius)
    payload = {
        "lattice": L.to_dict(),
        "lattice_sum": [s.lattice_sum.real, s.lattice_sum.imag],
        "dual_sum": [s.dual_sum.real, s.dual_sum.imag],
        "residual": s.residual,
    }
    return document(config, payload, {"poisson": check(s.residual, args.tol)})


def cmd_comb(args, config):
    L = parse_lattice(args.lattice)
    shift = parse_vector(args.shift, L.dim, "shift") if args.shift else np.zeros(L.dim)
    p = pair_from_comb(Coset(L, shift), args.time_radius, args.freq_radius)
    return document(config, {"pair": p.to_dict()}, {})


def cmd_invert(args, config):
    f = load_document(args.input, "expsum")
    if args.reciprocal:
        comp = compose(HolomorphicSymbol.reciprocal(), f, tol=args.tol / 10, tail_budget=args.tail_budget)
        eps = None
    else:
        comp = eps_inverse(f, args.eps, tol=args.tol / 10, tail_budget=args.tail_budget)
        eps = args.eps
    g = comp.g
    checks = {"alias": check(comp.alias_bound if np.isfinite(comp.alias_bound) else np.inf, args.tol)}
    if eps is not None:
        r_on, r_off = torus_residuals(f, comp, eps)
        checks["on_set"] = check(r_on, args.tol)
        checks["off_set"] = check(r_off, args.tol)
    else:
        checks["grid"] = check(comp.grid_residual, args.tol)
    payload = {"expsum": g.to_dict(), "grid_n": list(comp.grid_n), "grid_residual": comp.grid_residual}
    return document(config, payload, checks)


def _pair_for_points(points, cosets, freq_radius, max_attempts=4):
    R = freq_radius
    for _ in range(max_attempts):
        p = pair_from_points(points, cosets, R)
        try:
            return p, factor_measure(p, cosets)
        except WindowError as exc:
            if exc.required_radius is None or exc.required_radius <= R:
                raise
            R = exc.required_radius * 1.05
    raise WindowError("frequency window did not converge", required_radius=R)


def cmd_decompose(args, config):
    if bool(args.points) == bool(args.pair):
        raise InputError("give exactly one of --points and --pair")
    if args.points:
        try:
            pts = read_points_csv(args.points)
        except (OSError, ValueError) as exc:
            raise InputError(f"{args.points}: {exc}") from None
        cosets = detect_lattice_union(pts, args.max_cosets, args.detect_tol)
        p, dec = _pair_for_points(pts, cosets, args.freq_radius)
        dec = spectral_parts(p, dec)
    else:
        p = load_document(args.pair, "pair")
        dec = run_decompose(p, args.max_cosets, args.tol, args.detect_tol)
    emit_radius = dec.period_length() if args.emit_radius is None else args.emit_radius
    doc = dec.to_dict(atom_radius=emit_radius)
    if args.strict:
        rec = check(dec.reconstruction_residual, args.tol)
    else:
        rec = dict(check(dec.reconstruction_residual, args.tol), ok=True, diagnostic=True)
    checks = {
        "factor_residual": check(dec.residual, args.tol),
        "periodicity": check(dec.periodicity_residual, args.periodicity_tol),
        "reconstruction": rec,
    }
    return document(config, {"decomposition": doc}, checks)


def cmd_cohere(args, config, rng):
    if not args.coset:
        raise InputError("give at least one --coset")
    parsed = [parse_coset(c) for c in args.coset]
    cosets = [c for c, _ in parsed]
    factors = [None if w == 1 else ExpSum.constant(w, c.dim) for c, w in parsed]
    ts = rng.uniform(-args.t_range, args.t_range, size=(args.t_samples, cosets[0].dim))
    ts = np.vstack([np.zeros((1, cosets[0].dim)), ts])

    def make_pair(R):
        return synthesize(cosets, factors, args.time_radius, R)

    cert = certify(make_pair, args.eps, args.freq_radius, t_samples=ts, tol=args.tol)
    rows = inequality_trials(cert, args.trials, rng, args.max_terms, args.u_radius, args.tol)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "lhs", "rhs", "ok"])
        for trial, lhs, rhs, ok in rows:
            w.writerow([trial, repr(lhs), repr(rhs), int(ok)])
        emit(buf.getvalue(), args.csv)
    constants = {(rep.C, rep.r) for rep in cert.reports}
    checks = {
        "interpolation": check(cert.interpolation_residual, args.tol),
        "inequality": {"value": sum(not r[3] for r in rows), "tol": 0, "ok": all(r[3] for r in rows)},
        "t_independence": {"value": len(constants), "tol": 1, "ok": len(constants) == 1},
    }
    payload = {
        "certificate": cert.to_dict(include_sums=args.include_sums),
        "trials": [{"trial": t, "lhs": a, "rhs": b, "ok": o} for t, a, b, o in rows],
    }
    return document(config, payload, checks)


def spot_svg(points, masses, size=480, margin=20):
    """Spot diagram: a disc per atom with area proportional to ``|mass|``."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[1] == 1:
        pts = np.hstack([pts, np.zeros_like(pts)])
    w = np.abs(np.asarray(masses))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(np.max(hi - lo), 1e-12))
    scale = (size - 2 * margin) / span
    wmax = float(w.max()) if len(w) and w.max() > 0 else 1.0
    rmax = max(1.0, min(8.0, 0.4 * scale * span / max(np.sqrt(len(pts)), 1.0)))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for (x, y), m in zip(pts, w):
        if m <= 0:
            continue
        cx = margin + (x - lo[0]) * scale
        cy = size - margin - (y - lo[1]) * scale if np.ptp(pts[:, 1]) > 0 else size / 2
        r = rmax * np.sqrt(m / wmax)
        out.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{r:.3f}" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plot(args, config):
    p = load_document(args.input, "pair")
    nu = p.freq if args.side == "freq" else p.time
    if not isinstance(nu, AtomicMeasure):
        raise InputError(f"{args.input}: the {args.side} side is not atomic")
    if args.radius is not None:
        nu = nu.restrict(args.radius)
    if args.svg:
        emit(spot_svg(nu.points, nu.masses), args.svg)
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(nu.dim)] + ["re", "im"])
        for x, m in zip(nu.points, nu.masses):
            w.writerow([repr(float(v)) for v in x] + [repr(float(m.real)), repr(float(m.imag))])
        emit(buf.getvalue(), args.csv)
    return document(config, {"atoms": len(nu), "side": args.side}, {})


# --- driver -------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="quasiwiener", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed of the single random generator")
    common.add_argument("--out", default=None, help="JSON output path (default: stdout)")
    sub = ap.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    s = sub.add_parser("poisson", help="Poisson summation check for a Gaussian")
    s.add_argument("--lattice", default="Z")
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--center", default=None)
    s.add_argument("--radius", type=float, default=8.0)
    s.add_argument("--dual-radius", type=float, default=None)
    s.add_argument("--tol", type=float, default=1e-10)

    s = sub.add_parser("comb", help="Fourier pair of a lattice comb")
    s.add_argument("--lattice", default="Z")
    s.add_argument("--shift", default=None)
    s.add_argument("--time-radius", type=float, default=10.0)
    s.add_argument("--freq-radius", type=float, default=10.0)

    s = sub.add_parser("invert", help="eps-inverse of a serialized exponential sum")
    s.add_argument("--input", required=True)
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--reciprocal", action="store_true", help="plain reciprocal instead of the eps-inverse")
    s.add_argument("--tail-budget", type=float, default=0.0)
    s.add_argument("--tol", type=float, default=1e-6)

    s = sub.add_parser("decompose", help="lattice-coset decomposition")
    s.add_argument("--points", default=None, help="CSV point set, one point per row")
    s.add_argument("--pair", default=None, help="serialized Fourier pair")
    s.add_argument("--max-cosets", type=int, default=4)
    s.add_argument("--detect-tol", type=float, default=1e-6)
    s.add_argument("--freq-radius", type=float, default=64.0)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--periodicity-tol", type=float, default=1e-8)
    s.add_argument("--strict", action="store_true", help="count the reconstruction residual as a check")
    s.add_argument("--emit-radius", type=float, default=None, help="radius of the listed spectral atoms")

    s = sub.add_parser("cohere", help="coherence certificate and inequality trials")
    s.add_argument("--coset", action="append", help="LATTICE[:SHIFT[:WEIGHT]], repeatable")
    s.add_argument("--eps", type=float, default=0.5)
    s.add_argument("--time-radius", type=float, default=30.0)
    s.add_argument("--freq-radius", type=float, default=600.0)
    s.add_argument("--t-samples", type=int, default=10)
    s.add_argument("--t-range", type=float, default=5.0)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--max-terms", type=int, default=8)
    s.add_argument("--u-radius", type=float, default=10.0)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--csv", default=None, help="trial table output path")
    s.add_argument("--include-sums", action="store_true", help="embed g and h in the certificate")

    s = sub.add_parser("plot", help="spot diagram of a pair")
    s.add_argument("--input", required=True)
    s.add_argument("--side", choices=("freq", "time"), default="freq")
    s.add_argument("--radius", type=float, default=None)
    s.add_argument("--svg", default=None)
    s.add_argument("--csv", default=None)
    return ap


COMMANDS = {
    "poisson": cmd_poisson,
    "comb": cmd_comb,
    "invert": cmd_invert,
    "decompose": cmd_decompose,
    "plot": cmd_plot,
}


def run(argv=None):
    """Run one subcommand; returns ``(exit_status, document)``."""
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "seed")}
    try:
        config = RunConfig(args.command, args.seed, params)
        rng = np.random.default_rng(args.seed)
        if args.command == "cohere":
            doc, ok = cmd_cohere(args, config, rng)
        else:
            doc, ok = COMMANDS[args.command](args, config)
    except InputError as exc:
        print(f"quasiwiener: error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    except QuasiWienerError as exc:
        print(f"quasiwiener: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL, None
    emit(dumps(doc), args.out)
    return (EXIT_OK if ok else EXIT_FAIL), doc


def main(argv=None):
    status, _ = run(argv)
    return status


if __name__ == "__main__":
    sys.exit(main())
