"""Command-line front end.

Every output carries the fully resolved configuration: CSV files start with
``#config key=value`` lines and JSON documents hold a ``config`` object. Either
form can be passed back through ``--config`` to reproduce the run.

Exit status: 0 on success, 1 on argument or domain errors, 2 when a solver
fails to converge.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from dataclasses import asdict

import numpy as np

from . import criteria, fields, geometry, identity, solver
from .nonlinearity import parse_nonlinearity

SUBCOMMANDS = (
    "threshold",
    "sweep",
    "field-check",
    "mesh",
    "solve",
    "verify-identity",
    "convergence",
    "certificate",
)
NOT_ECHOED = {"command", "config", "out", "verbose"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def fmt(x) -> str:
    """17 significant digits; round-trip safe."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def to_json(obj, indent=0) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    return json.dumps(str(obj))


def load_config(path: str) -> dict:
    """Flat ``key=value`` file; ``#config`` lines of a CSV output and the
    ``config`` object of a JSON output are accepted as well."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return {k: str(v) for k, v in json.loads(text).get("config", {}).items()}
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#config "):
            line = line[len("#config "):]
        elif line.startswith("#") or "=" not in line:
            continue
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _domain_args(p):
    p.add_argument("--domain", choices=("sector", "annulus", "disk"), default="sector")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--s", type=float, default=0.3)
    p.add_argument("--r0", type=float, default=0.5, help="annulus inner radius")
    p.add_argument("--r1", type=float, default=1.5, help="annulus outer radius")
    p.add_argument("--radius", type=float, default=1.0, help="disk radius")


def _solver_args(p):
    p.add_argument("--p", type=float, default=1.5)
    p.add_argument("--f", default="constant:1", help="constant:<c> or power:<q>")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100)


def _mesh_args(p, nt=True):
    p.add_argument("--nr", type=int, default=64)
    if nt:
        p.add_argument("--nt", type=int, default=128)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pohozaev", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="key=value file (or a previous output)")
        p.add_argument("--out", help="output path (default: stdout)")
        return p

    p = add("threshold", "critical exponent and nonexistence threshold s_bar")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)

    p = add("sweep", "certificate table over a (p, q, s) grid")
    for name, lo, hi, n in (("p", 1.2, 1.8, 4), ("q", 10.0, 40.0, 4), ("s", 0.01, 0.2, 5)):
        p.add_argument(f"--{name}-min", type=float, default=lo)
        p.add_argument(f"--{name}-max", type=float, default=hi)
        p.add_argument(f"--{name}-steps", type=int, default=n)
    p.add_argument("--alpha", type=float, default=math.pi / 2)

    p = add("field-check", "finite-difference check of the sector field, or a boundary flux audit")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--s", type=float, default=0.3)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--audit", type=int, default=0, help="number of boundary samples; 0 runs the FD check")

    p = add("mesh", "export a mesh as CSV")
    _domain_args(p)
    _mesh_args(p)

    p = add("solve", "solve the Dirichlet problem; CSV of nodal values")
    _domain_args(p)
    _solver_args(p)
    _mesh_args(p)

    p = add("verify-identity", "both sides of the integral identity as JSON")
    _domain_args(p)
    _solver_args(p)
    _mesh_args(p)
    p.add_argument("--field", choices=("paper", "radial"), default=None,
                   help="default: paper on sectors, radial elsewhere")

    p = add("convergence", "identity residual over mesh levels (CSV)")
    _domain_args(p)
    _solver_args(p)
    p.add_argument("--levels", default="16,32,64")
    p.add_argument("--field", choices=("paper", "radial"), default=None)

    p = add("certificate", "nonexistence certificate for the sector problem")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--f", default=None, help="nonlinearity; default power:<q>")
    return ap


def _domain(args):
    if args.domain == "sector":
        return geometry.AnnularSector(args.alpha, args.s)
    if args.domain == "annulus":
        return geometry.Annulus(args.r0, args.r1)
    return geometry.Disk(args.radius)


def _field(args):
    name = args.field or ("paper" if args.domain == "sector" else "radial")
    args.field = name
    return fields.PaperField() if name == "paper" else fields.RadialField()


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in NOT_ECHOED and v is not None}


def _csv(args, header, rows) -> str:
    out = io.StringIO()
    out.write(f"#config subcommand={args.command}\n")
    for k, v in _config(args).items():
        out.write(f"#config {k}={fmt(v)}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(x) for x in row) + "\n")
    return out.getvalue()


def _json(args, payload) -> str:
    cfg = {"subcommand": args.command}
    cfg.update(_config(args))
    return to_json({**payload, "config": cfg}) + "\n"


def _grid(lo, hi, n):
    return [lo] if n == 1 else list(np.linspace(lo, hi, n))


def _solve(args):
    mesh = geometry.build_mesh(_domain(args), args.nr, args.nt)
    nl = parse_nonlinearity(args.f)
    cfg = solver.SolverConfig(eps=args.eps, tol=args.tol, max_iter=args.max_iter)
    return mesh, nl, solver.solve(mesh, args.p, nl, cfg)


def cmd_threshold(args):
    sb = criteria.s_bar(args.p, args.q)
    qc = criteria.critical_exponent(args.p, 2)
    return _json(args, {"p": args.p, "q": args.q, "q_critical": qc, "s_bar": sb})


def cmd_sweep(args):
    rows = criteria.sweep(
        _grid(args.p_min, args.p_max, args.p_steps),
        _grid(args.q_min, args.q_max, args.q_steps),
        _grid(args.s_min, args.s_max, args.s_steps),
        alpha=args.alpha,
    )
    header = ["p", "q", "s", "q_critical", "coefficient", "s_bar", "verdict"]
    return _csv(args, header, [tuple(asdict(r).values()) for r in rows])


def cmd_field_check(args):
    dom = geometry.AnnularSector(args.alpha, args.s)
    if args.audit:
        audit = fields.boundary_flux_audit(dom, args.audit)
        return _csv(args, ["edge_kind", "rho", "theta", "flux"], audit.samples)
    pts = random_sector_points(dom, args.points, args.seed)
    rep = fields.fd_consistency(fields.PaperField(), pts, args.h)
    rows = zip(pts[:, 0], pts[:, 1], rep.div_analytic, rep.div_fd, rep.div_error, rep.quad_errors.max(axis=1))
    header = ["point_x", "point_y", "div_analytic", "div_fd", "err_div", "err_quad_max"]
    return _csv(args, header, rows)


def random_sector_points(dom: geometry.AnnularSector, n: int, seed: int) -> np.ndarray:
    """Points uniform in (rho, theta) over the open sector."""
    rng = np.random.default_rng(seed)
    rho = rng.uniform(1.0 - dom.s, 1.0 + dom.s, n)
    theta = rng.uniform(-dom.alpha, dom.alpha, n)
    return np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])


def cmd_mesh(args):
    mesh = geometry.build_mesh(_domain(args), args.nr, args.nt)
    meta = f"#config subcommand={args.command}\n" + "".join(
        f"#config {k}={fmt(v)}\n" for k, v in _config(args).items()
    )
    return meta + mesh.to_csv()


def cmd_solve(args):
    mesh, _, sol = _solve(args)
    rows = zip(range(mesh.n_vertices), mesh.vertices[:, 0], mesh.vertices[:, 1], sol.nodal_values)
    return _csv(args, ["vertex_index", "x", "y", "u"], rows)


def cmd_verify_identity(args):
    fld = _field(args)
    _, nl, sol = _solve(args)
    return _json(args, identity.identity_sides(sol, fld, nl).as_dict())


def cmd_convergence(args):
    fld = _field(args)
    try:
        levels = [int(x) for x in args.levels.split(",")]
    except ValueError:
        raise UsageError(f"--levels expects a comma-separated list of integers, got {args.levels!r}")
    nl = parse_nonlinearity(args.f)
    cfg = solver.SolverConfig(eps=args.eps, tol=args.tol, max_iter=args.max_iter)
    rows = identity.convergence_study(_domain(args), args.p, nl, fld, levels, cfg)
    header = ["level", "h", "lhs", "rhs_total", "residual_rel", "observed_order"]
    return _csv(args, header, [tuple(asdict(r).values()) for r in rows])


def cmd_certificate(args):
    nl = parse_nonlinearity(args.f) if args.f else parse_nonlinearity(f"power:{args.q!r}")
    v = criteria.certificate(args.p, args.q, args.s, args.alpha, nl)
    return _json(args, asdict(v))


COMMANDS = {
    "threshold": cmd_threshold,
    "sweep": cmd_sweep,
    "field-check": cmd_field_check,
    "mesh": cmd_mesh,
    "solve": cmd_solve,
    "verify-identity": cmd_verify_identity,
    "convergence": cmd_convergence,
    "certificate": cmd_certificate,
}


def _config_path(argv):
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith("--config="):
            return a.split("=", 1)[1]
    return None


def _parse(argv):
    parser = build_parser()
    command = next((a for a in argv if a in SUBCOMMANDS), None)
    path = _config_path(argv)
    if command and path:
        # config values become defaults so that explicit flags still win
        cfg = load_config(path)
        cfg.pop("subcommand", None)
        sub = parser._subparsers._group_actions[0].choices[command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for k, v in cfg.items():
            if k not in known or k in NOT_ECHOED:
                raise UsageError(f"unknown config key {k!r}")
            conv = known[k].type or str
            defaults[k] = conv(v)
        sub.set_defaults(**defaults)
        for a in sub._actions:
            if a.dest in defaults:
                a.required = False
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError(parser.format_usage())
    return args


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        text = COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}".rstrip() + "\n")
        return 1
    except solver.ConvergenceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (ValueError, TypeError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
