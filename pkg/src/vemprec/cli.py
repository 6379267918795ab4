"""``vemprec`` command line: run benchmark suites and write result tables.

Exit status: 0 on success, 2 if any PCG run hit the iteration limit (tables
are still written), 1 on configuration, IO or numerical errors.
"""

from __future__ import annotations

import argparse
import sys

from .bench import ConfigError, emit_table, parse_config, run_suite, spec_from_options
from .linalg import NotSPDError
from .mesh import MeshError

EXIT_OK, EXIT_ERROR, EXIT_UNCONVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _split(values):
    if not values:
        return None
    return [v.strip() for item in values for v in item.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vemprec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run a suite and emit a table")
    run.add_argument("--spec", help="flat key=value config file; flags override its values")
    run.add_argument("--preset", choices=("table1", "table2", "table3", "table4"))
    run.add_argument("--seed", type=int, help="mesh/coefficient seed for presets")
    run.add_argument("--sizes", action="append", help="preset sizes, comma separated")
    run.add_argument("--dim", type=int, choices=(2, 3))
    run.add_argument("--gen", action="append", metavar="SRC",
                     help="voronoi:N[:lloyd=K][:seed=S] | quad:N | hex:N (repeatable or comma list)")
    run.add_argument("--mesh", action="append", metavar="PATH", help="mesh file (repeatable)")
    run.add_argument("--coef", action="append", help="const[:v] | random:SEED | inclusion:KAPPA1")
    run.add_argument("--precond", action="append", help="none|sgs|fict|add|mul, comma separated")
    run.add_argument("--smoother", choices=("jacobi", "sgs"))
    run.add_argument("--sweeps", type=int)
    run.add_argument("--tol", type=float)
    run.add_argument("--max-iter", type=int, dest="max_iter")
    run.add_argument("--coarse", choices=("direct", "amg"))
    run.add_argument("--rhs-seed", type=int, dest="rhs_seed")
    run.add_argument("--out", help="output file (default: stdout)")
    run.add_argument("--format", choices=("csv", "markdown"))
    run.add_argument("-q", "--quiet", action="store_true", help="no progress lines on stderr")
    return parser


def _options(args) -> dict:
    opts: dict = {}
    if args.spec:
        try:
            with open(args.spec) as fh:
                opts = parse_config(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read spec file: {exc}") from None
    flags = {
        "preset": args.preset,
        "seed": args.seed,
        "sizes": _split(args.sizes),
        "dim": args.dim,
        "gen": _split(args.gen),
        "mesh": args.mesh,
        "coef": _split(args.coef),
        "precond": _split(args.precond),
        "smoother": args.smoother,
        "sweeps": args.sweeps,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "coarse": args.coarse,
        "rhs_seed": args.rhs_seed,
        "out": args.out,
        "format": args.format,
    }
    opts.update({k: v for k, v in flags.items() if v is not None})
    if not opts:
        raise ConfigError("nothing to run: give --spec, --preset or --gen/--mesh")
    return opts


def _progress(row):
    status = "" if row.converged else " (not converged)"
    print(
        f"{row.mesh} {row.coef} {row.preconditioner}: K={row.condition:.4g} "
        f"iters={row.iterations}{status} [{row.wall_time:.2f}s]",
        file=sys.stderr,
        flush=True,
    )


def cmd_run(args) -> int:
    spec = spec_from_options(_options(args))
    rows = run_suite(spec, progress=None if args.quiet else _progress)
    text = emit_table(rows, spec.format, spec.out)
    if spec.out is None:
        sys.stdout.write(text)
    return EXIT_OK if all(r.converged for r in rows) else EXIT_UNCONVERGED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return cmd_run(args)
    except (ConfigError, MeshError, NotSPDError, OSError) as exc:
        print(f"vemprec: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
