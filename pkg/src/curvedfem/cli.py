"""Command-line driver: convergence tables, geometric errors, estimate checks, mesh info.

    curvedfem convergence --geo 1 --geo exact --levels 4
    curvedfem geom --geo 2 --levels 3 --format markdown
    curvedfem boundcheck --levels 3
    curvedfem meshinfo --geo exact --levels 2

The worker count for curved-element evaluation can be set with the
``CURVEDFEM_THREADS`` environment variable.
"""

import argparse
import sys

from .analysis import (
    convergence_study,
    geometric_errors,
    grad_sincos,
    hess_sincos,
    interpolation_bound_check,
    sincos,
)
from .errors import CurvedFemError
from .mesh import disk_mesh, normalize_geo, validate
from .quadrature import rule

GEO_CHOICES = ("1", "2", "3", "exact")
MAX_LEVELS = 6

CONVERGENCE_HEADER = ["geo_order", "level", "h", "E_area", "E_bdry", "E_H1", "rate_H1", "E_L2", "rate_L2"]
GEOM_HEADER = ["geo_order", "level", "h", "E_area", "E_bdry"]
BOUNDCHECK_HEADER = ["geo_order", "level", "h", "max_ratio_L2", "max_ratio_H1"]
MESHINFO_HEADER = ["geo_order", "level", "n_vertices", "n_elements", "n_curved", "h",
                   "gamma", "cpsi1", "cpsi2", "min_det"]


def fmt_sci(x):
    """Four significant digits with a compact exponent: ``0.08013 -> '8.013e-2'``."""
    mant, exp = f"{x:.3e}".split("e")
    return f"{mant}e{int(exp)}"


def fmt_rate(r, blank=""):
    return blank if r is None else f"{r:.2f}"


def _level_arg(text):
    n = int(text)
    if not 0 <= n <= MAX_LEVELS:
        raise argparse.ArgumentTypeError(f"levels must be in 0..{MAX_LEVELS}")
    return n


def _quad_arg(text):
    n = int(text)
    if not 1 <= n <= 8:
        raise argparse.ArgumentTypeError("quadrature degree must be in 1..8")
    return n


def build_parser():
    parser = argparse.ArgumentParser(prog="curvedfem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, default_geo, help_text in [
        ("convergence", ["1"], "P1 errors and observed rates on the unit disk"),
        ("geom", ["1"], "area and boundary errors of the represented disk"),
        ("boundcheck", ["exact"], "observed ratios of the curved interpolation estimates"),
        ("meshinfo", ["exact"], "mesh counts and sampled regularity constants"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(default_geo=default_geo)
        p.add_argument("--geo", action="append", choices=GEO_CHOICES,
                       help="geometry order (repeatable); 'exact' uses the circular arc")
        p.add_argument("--levels", type=_level_arg, default=3, help="finest level, levels 0..N (N <= 6)")
        p.add_argument("--quad-degree", type=_quad_arg, default=8)
        p.add_argument("--format", choices=("csv", "markdown"), default="csv")
        p.add_argument("--output", help="write to this file instead of stdout")
    return parser


def _convergence_rows(geo, args, markdown):
    blank = "--" if markdown else ""
    for r in convergence_study(geo, args.levels, args.quad_degree):
        yield [geo, str(r.level), fmt_sci(r.h), fmt_sci(r.area_error), fmt_sci(r.bdry_error),
               fmt_sci(r.e_h1), fmt_rate(r.rate_h1, blank), fmt_sci(r.e_l2), fmt_rate(r.rate_l2, blank)]


def _geom_rows(geo, args, markdown):
    quad = rule(args.quad_degree)
    for level in range(args.levels + 1):
        tri = disk_mesh(level, geo)
        ge = geometric_errors(tri, quad)
        yield [geo, str(level), fmt_sci(tri.h), fmt_sci(ge.area_error), fmt_sci(ge.bdry_error)]


def _boundcheck_rows(geo, args, markdown):
    quad = rule(args.quad_degree)
    for level in range(args.levels + 1):
        tri = disk_mesh(level, geo)
        rep = interpolation_bound_check(tri, sincos, grad_sincos, hess_sincos, quad)
        yield [geo, str(level), fmt_sci(tri.h), f"{rep.max_ratio_l2:.4f}", f"{rep.max_ratio_h1:.4f}"]


def _meshinfo_rows(geo, args, markdown):
    for level in range(args.levels + 1):
        tri = disk_mesh(level, geo)
        rep = validate(tri, args.quad_degree)
        yield [geo, str(level), str(len(tri.vertices)), str(len(tri)), str(rep.n_curved),
               fmt_sci(tri.h), f"{rep.gamma:.4f}", f"{rep.cpsi1:.4f}", f"{rep.cpsi2:.4f}",
               f"{rep.min_det:.6f}"]


COMMANDS = {
    "convergence": (CONVERGENCE_HEADER, _convergence_rows),
    "geom": (GEOM_HEADER, _geom_rows),
    "boundcheck": (BOUNDCHECK_HEADER, _boundcheck_rows),
    "meshinfo": (MESHINFO_HEADER, _meshinfo_rows),
}


def render(header, rows, fmt):
    if fmt == "csv":
        return "".join(",".join(r) + "\n" for r in [header, *rows])
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def run(args):
    """Produce the table text for parsed ``args``."""
    header, producer = COMMANDS[args.command]
    geos = args.geo or args.default_geo
    markdown = args.format == "markdown"
    rows = []
    for geo in dict.fromkeys(geos):  # keep order, drop repeats
        normalize_geo(geo)
        rows.extend(producer(geo, args, markdown))
    return render(header, rows, args.format)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = run(args)
    except (CurvedFemError, ValueError, RuntimeError) as exc:
        print(f"curvedfem {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
