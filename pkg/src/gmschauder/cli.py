"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 degenerate process (``h`` flat where it must increase).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from gmschauder import __version__
from gmschauder.basis import basis_for
from gmschauder.fpt import default_band, first_passage
from gmschauder.io import write_paths, write_table
from gmschauder.process import DegenerateIncrementError, ProcessSpecError, parse_process
from gmschauder.sampler import sample_by_refinement, sample_paths
from gmschauder.tree import MAX_DEPTH, TreeError, make_tree, tree_rows
from gmschauder.verify import covariance_errors, parseval_grid, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_DEGENERATE = 0, 1, 2, 3
SEED_ENV = "GMSCHAUDER_SEED"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    process: str = "wiener"
    depth: int = 8
    seed: int = 0
    paths: int = 1
    output: str = "-"
    split: float = 0.5

    def __post_init__(self):
        if not 0 <= self.depth <= MAX_DEPTH:
            raise ConfigError(f"depth must be in [0, {MAX_DEPTH}], got {self.depth}")
        if self.paths < 1:
            raise ConfigError(f"path count must be >= 1, got {self.paths}")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _config(args) -> RunConfig:
    return RunConfig(
        process=args.process,
        depth=args.depth,
        seed=_default_seed() if getattr(args, "seed", None) is None else args.seed,
        paths=getattr(args, "paths", 1),
        output=getattr(args, "output", "-"),
        split=args.split,
    )


def _setup(cfg: RunConfig):
    spec = parse_process(cfg.process)
    tree = make_tree(cfg.depth, cfg.split)
    return spec, tree


def _base_header(cfg: RunConfig, tree, seeded: bool = True) -> dict:
    header = {"process": cfg.process, "depth": cfg.depth, "seed": cfg.seed, "tree": tree.description}
    if not seeded:
        del header["seed"]
    return header


def cmd_sample(args) -> int:
    cfg = _config(args)
    spec, tree = _setup(cfg)
    ids = np.arange(cfg.paths)
    if args.route == "refine":
        paths = sample_by_refinement(spec, tree, cfg.depth, cfg.seed, ids)
    else:
        paths = sample_paths(spec, tree, cfg.depth, cfg.seed, ids)
    write_paths(cfg.output, replace(paths, label=cfg.process))
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    spec, tree = _setup(cfg)
    checks = run_suite(spec, tree, args.gram_levels)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    if failed:
        worst = failed[0]
        print(f"verification failed: {worst.name}: {worst.detail}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"all {len(checks)} checks passed for {cfg.process} at depth {cfg.depth}")
    return EXIT_OK


def cmd_basis_dump(args) -> int:
    cfg = _config(args)
    spec, tree = _setup(cfg)
    basis = basis_for(spec, tree)
    rows = [(e.n, e.k, e.l, e.m, e.r, e.L, e.R) for e in basis.elements()]
    write_table(cfg.output, _base_header(cfg, tree, False), ["n", "k", "l", "m", "r", "L", "R"], rows)
    if args.curves:
        t = np.linspace(0.0, 1.0, args.points)
        M = basis.matrix(t)

        def curve_rows():
            for i in range(M.shape[0]):
                n, k = (0, 0) if i == 0 else (i.bit_length(), i - (1 << (i.bit_length() - 1)))
                for tj, v in zip(t, M[i]):
                    yield n, k, float(tj), float(v)

        header = dict(_base_header(cfg, tree, False), points=args.points)
        write_table(args.curves, header, ["n", "k", "t", "psi"], curve_rows())
    return EXIT_OK


def cmd_tree_dump(args) -> int:
    cfg = _config(args)
    tree = make_tree(cfg.depth, cfg.split)
    header = {"depth": cfg.depth, "tree": tree.description}
    write_table(cfg.output, header, ["n", "k", "l", "m", "r"], tree_rows(tree))
    return EXIT_OK


def cmd_covtable(args) -> int:
    cfg = _config(args)
    if not 0 <= args.min_depth <= cfg.depth:
        raise ConfigError(f"min depth must be in [0, {cfg.depth}]")
    spec, tree = _setup(cfg)
    grid = parseval_grid(args.points)
    rows = covariance_errors(spec, tree, range(args.min_depth, cfg.depth + 1), grid)
    out = []
    prev = math.inf
    for N, sup_err, mean_err in rows:
        out.append((N, sup_err, mean_err, int(sup_err < prev)))
        prev = sup_err
    header = dict(_base_header(cfg, tree, False), grid=f"(i+0.5)/{args.points}")
    write_table(cfg.output, header, ["N", "sup_error", "mean_error", "decreasing"], out)
    return EXIT_OK


def cmd_fpt_demo(args) -> int:
    cfg = _config(args)
    if not args.barrier > 0:
        raise ConfigError("barrier must be positive")
    if not 0 <= args.coarse <= cfg.depth:
        raise ConfigError(f"coarse depth must be in [0, {cfg.depth}]")
    spec, tree = _setup(cfg)
    band = default_band(spec, tree, args.coarse) if args.band is None else args.band
    if band < 0:
        raise ConfigError("band must be nonnegative")
    res = first_passage(spec, tree, args.barrier, args.coarse, cfg.depth, cfg.seed, np.arange(cfg.paths), band)
    counts, edges = res.histogram(args.bins)
    header = dict(
        _base_header(cfg, tree),
        barrier=args.barrier,
        band=band,
        coarse=args.coarse,
        paths=res.n_paths,
        crossings=res.crossings,
        survival=format(res.survival, ".6f"),
        survival_se=format(res.survival_se, ".6f"),
        refined_fraction=format(res.refined_fraction, ".6f"),
    )
    rows = [(float(a), float(b), int(c)) for a, b, c in zip(edges[:-1], edges[1:], counts)]
    write_table(cfg.output, header, ["t_lo", "t_hi", "crossings"], rows)
    return EXIT_OK


def _band(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinity") else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmschauder", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, depth=8, seed=True, output=True):
        p.add_argument("--process", default="wiener", help="wiener | ou:<alpha> | custom:<f-table>,<g-table>")
        p.add_argument("--depth", type=int, default=depth, help="tree depth N")
        p.add_argument("--split", type=float, default=0.5, help="split fraction of every support (0.5 = dyadic)")
        if seed:
            p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
        if output:
            p.add_argument("--output", "-o", default="-", help="output file ('-' for stdout)")

    p = sub.add_parser("sample", help="synthesize paths on the level-N grid")
    common(p)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--route", choices=("synthesize", "refine"), default="synthesize")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="run the invariant checks")
    common(p, depth=5, seed=False, output=False)
    p.add_argument("--gram-levels", type=int, default=5)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("basis-dump", help="write (n, k, l, m, r, L, R) per basis element")
    common(p, depth=4, seed=False)
    p.add_argument("--curves", default=None, help="also write sampled Psi curves to this file")
    p.add_argument("--points", type=int, default=129, help="grid points for --curves")
    p.set_defaults(func=cmd_basis_dump)

    p = sub.add_parser("tree-dump", help="write (n, k, l, m, r) per tree node")
    common(p, depth=4, seed=False)
    p.set_defaults(func=cmd_tree_dump)

    p = sub.add_parser("covtable", help="partial covariance error per level")
    common(p, depth=10, seed=False)
    p.add_argument("--min-depth", type=int, default=2)
    p.add_argument("--points", type=int, default=129)
    p.set_defaults(func=cmd_covtable)

    p = sub.add_parser("fpt-demo", help="adaptive first-passage estimate")
    common(p, depth=12)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--barrier", type=float, default=1.0)
    p.add_argument("--coarse", type=int, default=4)
    p.add_argument("--band", type=_band, default=None, help="proximity band ('inf' refines everything)")
    p.add_argument("--bins", type=int, default=16)
    p.set_defaults(func=cmd_fpt_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateIncrementError as exc:
        print(f"error: degenerate process: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ConfigError, ProcessSpecError, TreeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
