"""The ``qspec`` command.

JSON goes to stdout, diagnostics to stderr.  Exit codes: 0 ok, 1 a check
failed, 2 bad input, 64 usage error.  ``--manifest FILE`` records the full
invocation with every default and all outputs; ``qspec replay FILE`` re-runs
it and reports whether the outputs are bit-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
import time
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from importlib import metadata

import numpy as np
import scipy

from . import bounds, constants, plap_solver, quasihyperbolic, verify
from ._sampling import QuadratureSpec, thread_count
from .domains import Ball, parse_domain
from .errors import QSpecError
from .qc_maps import parse_map

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_USAGE = 0, 1, 2, 64
THEOREMS = ("convex", "beta", "infty", "quasiball", "qhbc", "stretched-cube")
MANIFEST_VERSION = 1


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------- value parsers

def _number(text):
    """Float from a decimal or a fraction such as 1/128."""
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        try:
            return float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _point(text):
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated point: {text!r}") from None


def parse_beta(text, n=None, K=None):
    """(beta, beta - 1) from ``inf``, ``mid`` (window midpoint) or a decimal.

    Decimals are parsed exactly so that 1.0000000000000000000001 keeps its
    excess even though the float rounds to 1.
    """
    if text is None:
        return None, None
    t = text.strip().lower()
    if t in ("inf", "infinity"):
        return math.inf, None
    if t == "mid":
        if n is None or K is None:
            raise InputError("--beta mid needs --n and --K")
        excess = constants.exponent_window(n, K, "beta").midpoint_excess
        return 1.0 + excess, excess
    try:
        d = Decimal(text)
    except InvalidOperation:
        raise InputError(f"--beta must be a number, 'inf' or 'mid', got {text!r}") from None
    return float(d), float(d - 1)


def _need(args, *names, why):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise InputError(f"{', '.join(missing)} required: {why}")


# ---------------------------------------------------------------- commands

def cmd_constants(args):
    beta, excess = parse_beta(args.beta, args.n, args.K)
    return EXIT_OK, {"constants": constants.constants_record(args.n, args.K, args.p, beta, excess),
                     "inputs": {"n": args.n, "K": args.K, "p": args.p, "beta": beta, "beta_excess": excess}}


def cmd_bound(args):
    th = args.theorem
    if th == "convex":
        _need(args, "n", "p", "diameter", why="the convex bound needs the dimension, p and the diameter")
        report = bounds.bound_convex(args.n, args.p, args.diameter)
    elif th == "stretched-cube":
        _need(args, "n", "p", "a", why="the stretched-cube bound needs n, p and the stretch exponent a")
        report = bounds.bound_stretched_cube(args.n, args.p, args.a)
    elif th == "infty":
        _need(args, "n", "p", "K", "vol_source", "volume", "jac_sup",
              why="the bounded-Jacobian bound needs n, p, K, both volumes and sup |J|")
        report = bounds.bound_infty_regular(args.n, args.p, args.K, args.vol_source, args.volume, args.jac_sup,
                                            source_diameter=args.diameter)
    else:
        _need(args, "n", "p", "K", "beta", why=f"theorem {th!r} needs n, p, K and beta")
        beta, excess = parse_beta(args.beta, args.n, args.K)
        if th == "beta":
            jac = args.jac_norm
            if jac is None:
                _need(args, "map", why="theorem 'beta' needs --jac-norm or a --map to measure it on the unit ball")
                if not beta > 1 or excess is not None and 1.0 + excess == 1.0:
                    raise InputError("measuring ||J||_beta needs a representable beta > 1; pass --jac-norm")
                from .quadrature import jacobian_norm_beta
                jac = jacobian_norm_beta(parse_map(args.map, args.n), Ball(args.n), beta,
                                         QuadratureSpec.mc(args.samples, args.seed)).value
            _need(args, "volume", why="theorem 'beta' needs the target volume")
            report = bounds.bound_beta_regular(args.n, args.p, args.K, beta, args.volume, jac,
                                               beta_excess=excess, base_diameter=args.diameter,
                                               base_volume=args.vol_source)
        elif th == "quasiball":
            _need(args, "volume", why="the quasi-ball bound needs the domain volume")
            report = bounds.bound_quasiball(args.n, args.p, args.K, beta, args.volume, beta_excess=excess)
        else:
            _need(args, "gamma", "R_star", why="the boundary-condition bound needs gamma and R*")
            report = bounds.bound_qhbc(args.n, args.p, args.K, args.gamma, beta, args.R_star, beta_excess=excess)
    return EXIT_OK, {"report": report.to_dict()}


def cmd_verify(args):
    maps = [parse_map(t, args.n) for t in args.map] if args.map else verify.default_maps(args.n)
    spec = QuadratureSpec.mc(args.samples, args.seed)
    suites = verify.SUITES if args.suite == "all" else (args.suite,)
    kw = {}
    if args.p is not None or args.q is not None:
        _need(args, "p", "q", why="restricting the exponent pairs needs both --p and --q")
    rows = []
    for name in suites:
        opts = dict(kw)
        if name in ("norm", "relations") and args.p is not None:
            opts["pairs"] = ((args.p, args.q),)
        if name == "rhi" and args.K is not None:
            opts["K"] = args.K
        rows.extend(verify.run_suite(name, maps, spec, **opts))
    ok = all(r.holds for r in rows)
    payload = {"suite": args.suite, "n": args.n, "quadrature": spec.to_dict(), "all_hold": ok,
               "rows": [r.to_dict() for r in rows]}
    return (EXIT_OK if ok else EXIT_FAILED), payload


def cmd_eigen(args):
    d = parse_domain(args.domain)
    est = plap_solver.minimize(d, args.p, args.h, restarts=args.restarts, seed=args.seed, max_iter=args.max_iter)
    if args.dump_field:
        plap_solver.write_field_csv(est.minimizer, args.dump_field)
    out = est.to_dict()
    out["domain"] = d.to_record()
    out["p"] = args.p
    if not est.converged:
        print("warning: eigensolver did not converge; reporting best-so-far", file=sys.stderr)
    return EXIT_OK, {"eigen": out}


def cmd_qh(args):
    d = parse_domain(args.domain)
    graph = quasihyperbolic.QHGraph(d, args.h)
    targets = args.x
    values = quasihyperbolic.qh_distance(d, args.x0, np.array(targets), args.h, graph=graph)
    return EXIT_OK, {"qh": {"domain": d.to_record(), "h": args.h, "x0": args.x0, "x": targets,
                            "k": [float(v) for v in np.atleast_1d(values)], "nodes": len(graph.nodes),
                            "exact_boundary_distance": graph.exact_distance}}


def cmd_qh_fit(args):
    d = parse_domain(args.domain)
    fit = quasihyperbolic.fit_gamma(d, args.x0, args.h, args.samples, args.seed, c0_cap=args.c0_cap,
                                    min_distance=args.min_distance)
    out = fit.to_dict()
    out.update(domain=d.to_record(), h=args.h, seed=args.seed)
    if fit.degenerate:
        print("warning: log-ratio range too small; gamma is poorly determined", file=sys.stderr)
    return EXIT_OK, {"fit": out}


def cmd_example(args):
    spec = QuadratureSpec.mc(args.samples, args.seed)
    cases, ok = [], True
    for a in args.a:
        res = verify.stretched_cube_check(args.n, a, args.p, spec)
        ok = ok and all(r.holds for r in res["rows"])
        cases.append({"a": a, "rows": [r.to_dict() for r in res["rows"]], "jac_sup": res["jac_sup"],
                      "exact_sup": res["exact_sup"], "image_volume": res["image_volume"],
                      "bound": res["bound"].to_dict()})
    return (EXIT_OK if ok else EXIT_FAILED), {"n": args.n, "p": args.p, "quadrature": spec.to_dict(),
                                              "all_hold": ok, "cases": cases}


def _canonical(obj):
    return json.dumps(obj, sort_keys=True)


def _differences(a, b, path=""):
    if isinstance(a, dict) and isinstance(b, dict):
        out = []
        for k in sorted(set(a) | set(b)):
            out += _differences(a.get(k), b.get(k), f"{path}/{k}")
        return out
    if isinstance(a, list) and isinstance(b, list) and len(a) == len(b):
        out = []
        for i, (x, y) in enumerate(zip(a, b)):
            out += _differences(x, y, f"{path}/{i}")
        return out
    return [] if _canonical(a) == _canonical(b) else [path or "/"]


def cmd_replay(args):
    try:
        with open(args.manifest_file) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest {args.manifest_file!r}: {exc}") from None
    if "argv" not in manifest or "outputs" not in manifest:
        raise InputError("manifest lacks argv or outputs")
    code, outputs = run(manifest["argv"])
    diffs = _differences(manifest["outputs"], outputs)
    if code != manifest.get("exit_code"):
        diffs.append("/exit_code")
    same = not diffs
    return (EXIT_OK if same else EXIT_FAILED), {"replay": {"identical": same, "differences": diffs,
                                                           "threads": thread_count(),
                                                           "argv": manifest["argv"]}}


# ---------------------------------------------------------------- parser

def build_parser():
    top = _Parser(prog="qspec", description="Lower bounds and numerical checks for Neumann p-Laplace eigenvalues.")
    top.add_argument("--manifest", metavar="FILE", help="write a replayable run manifest")
    top.add_argument("--csv", action="store_true", help="emit CSV rows instead of JSON where tabular")
    # the same options after the subcommand; SUPPRESS keeps a top-level value
    common = _Parser(add_help=False)
    common.add_argument("--manifest", metavar="FILE", default=argparse.SUPPRESS, help="write a replayable run manifest")
    common.add_argument("--csv", action="store_true", default=argparse.SUPPRESS, help="emit CSV where tabular")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, parents=[common], **k)

    c = sub.add_parser("constants", help="every explicit constant for (n, K, p, beta)")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--K", type=_number, default=1.0)
    c.add_argument("--p", type=_number)
    c.add_argument("--beta", help="decimal, 'inf' or 'mid'")
    c.set_defaults(func=cmd_constants)

    b = sub.add_parser("bound", help="lower bound on mu_p")
    b.add_argument("--theorem", choices=THEOREMS, required=True)
    b.add_argument("--n", type=int)
    b.add_argument("--p", type=_number)
    b.add_argument("--K", type=_number)
    b.add_argument("--beta", help="decimal (parsed exactly), 'inf' or 'mid' for the window midpoint")
    b.add_argument("--volume", type=_number, help="volume of the domain (target)")
    b.add_argument("--vol-source", type=_number, help="volume of the source or base domain")
    b.add_argument("--diameter", type=_number, help="diameter of the convex (source/base) domain")
    b.add_argument("--jac-norm", type=_number, help="||J||_beta on the base domain")
    b.add_argument("--jac-sup", type=_number, help="sup |J| on the source domain")
    b.add_argument("--gamma", type=_number)
    b.add_argument("--R-star", dest="R_star", type=_number)
    b.add_argument("--a", type=_number, help="stretch exponent for the stretched cube")
    b.add_argument("--map", help="measure ||J||_beta for this map when --jac-norm is absent")
    b.add_argument("--samples", type=int, default=1_000_000)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bound)

    v = sub.add_parser("verify", help="run inequality checks over maps")
    v.add_argument("suite", choices=verify.SUITES + ("all",))
    v.add_argument("--map", action="append", help="map descriptor (repeatable); default: the whole zoo")
    v.add_argument("--n", type=int, default=3)
    v.add_argument("--p", type=_number)
    v.add_argument("--q", type=_number)
    v.add_argument("--K", type=_number, help="rhi: coefficient fixing the exponent window")
    v.add_argument("--samples", type=int, default=1_000_000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eigen", help="grid estimate of mu_p")
    e.add_argument("--domain", required=True)
    e.add_argument("--p", type=_number, required=True)
    e.add_argument("--h", type=_number, required=True)
    e.add_argument("--restarts", type=int, default=8)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--max-iter", type=int, default=100_000)
    e.add_argument("--dump-field", metavar="FILE")
    e.set_defaults(func=cmd_eigen)

    q = sub.add_parser("qh", help="quasihyperbolic distance")
    q.add_argument("--domain", required=True)
    q.add_argument("--x0", type=_point, required=True)
    q.add_argument("--x", type=_point, action="append", required=True)
    q.add_argument("--h", type=_number, default=1 / 128)
    q.set_defaults(func=cmd_qh)

    f = sub.add_parser("qh-fit", help="empirical gamma of the quasihyperbolic growth condition")
    f.add_argument("--domain", required=True)
    f.add_argument("--x0", type=_point)
    f.add_argument("--h", type=_number, default=1 / 128)
    f.add_argument("--samples", type=int, default=2000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--c0-cap", type=_number, default=quasihyperbolic.DEFAULT_C0_CAP)
    f.add_argument("--min-distance", type=_number)
    f.set_defaults(func=cmd_qh_fit)

    x = sub.add_parser("example", help="stretched-cube bound end to end")
    x.add_argument("--n", type=int, default=3)
    x.add_argument("--a", type=_number, action="append")
    x.add_argument("--p", type=_number, default=4.0)
    x.add_argument("--samples", type=int, default=1_000_000)
    x.add_argument("--seed", type=int, default=0)
    x.set_defaults(func=cmd_example)

    r = sub.add_parser("replay", help="re-run a manifest and compare outputs bit for bit")
    r.add_argument("manifest_file")
    r.set_defaults(func=cmd_replay)
    return top


def _finalize(args):
    if args.command == "example" and not args.a:
        args.a = [0.5, 1.0]


def run(argv):
    """Parse and execute; returns (exit code, JSON-ready payload)."""
    args = build_parser().parse_args(argv)
    _finalize(args)
    return args.func(args)


def _inputs(args):
    return {k: v for k, v in vars(args).items() if k not in ("func", "manifest")}


def _versions():
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = None
    return {"qspec": pkg, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def _csv_rows(payload):
    rows = None
    if "rows" in payload:
        rows = payload["rows"]
    elif "cases" in payload:
        rows = [dict(r, a=c["a"]) for c in payload["cases"] for r in c["rows"]]
    elif "report" in payload:
        rows = [{k: v for k, v in payload["report"].items() if not isinstance(v, (dict, list))}]
    if rows is None:
        return None
    flat = [{k: (json.dumps(v) if isinstance(v, (dict, list)) else v) for k, v in r.items()} for r in rows]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(dict.fromkeys(k for r in flat for k in r)))
    w.writeheader()
    w.writerows(flat)
    return buf.getvalue()


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return exc.code or EXIT_OK
    _finalize(args)
    start = time.perf_counter()
    try:
        code, payload = args.func(args)
    except (InputError, QSpecError, ValueError) as exc:
        print(f"qspec {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    wall = time.perf_counter() - start
    text = _csv_rows(payload) if args.csv else None
    sys.stdout.write(text if text is not None else json.dumps(payload, indent=2) + "\n")
    if args.manifest:
        argv_replay = [a for a in argv]
        # the manifest option itself is not part of what gets replayed
        if "--manifest" in argv_replay:
            i = argv_replay.index("--manifest")
            del argv_replay[i:i + 2]
        argv_replay = [a for a in argv_replay if not a.startswith("--manifest=")]
        manifest = {"manifest_version": MANIFEST_VERSION, "argv": argv_replay, "command": args.command,
                    "inputs": _inputs(args), "versions": _versions(), "threads": thread_count(),
                    "wall_time_s": wall, "exit_code": code, "outputs": payload}
        with open(args.manifest, "w") as fh:
            json.dump(manifest, fh, indent=2)
    if code == EXIT_FAILED:
        print(f"qspec {args.command}: one or more checks failed", file=sys.stderr)
    return code


def load_schema(name):
    """The shipped JSON schema for a command's output (or ``manifest``)."""
    from importlib import resources

    return json.loads((resources.files("qspec") / "schemas" / f"{name}.json").read_text())
