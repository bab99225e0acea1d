"""Command-line front end.

Subcommands: ``build-gmra``, ``run``, ``validate-gmra``, ``width``.
Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness
from .gmra import build_gmra, load_gmra, save_gmra, validate_gmra


def _add_point_source(p: argparse.ArgumentParser, n_default: int) -> None:
    p.add_argument("--input", help=".npy file of points (rows), rescaled into radius 1-mu if needed")
    p.add_argument("--manifold", choices=harness.MANIFOLDS, help="synthetic manifold to sample")
    p.add_argument("--n", type=int, default=n_default, help="number of samples")
    p.add_argument("--N", type=int, default=20, help="ambient dimension")
    p.add_argument("--d", type=int, default=2, help="intrinsic dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frame-seed", type=int, default=None,
                   help="seed of the random embedding frame (defaults to --seed); "
                        "pass the build seed to sample the same embedded manifold")
    p.add_argument("--mu", type=float, default=0.05, help="radius margin; data scaled to norm <= 1-mu")


def _points_from_args(args) -> np.ndarray:
    if args.input:
        pts = np.load(args.input)
        top = np.linalg.norm(pts, axis=1).max(initial=0.0)
        if top > 1.0 - args.mu and top > 0.0:
            pts = pts * ((1.0 - args.mu) / top)
        return pts
    if not args.manifold:
        raise SystemExit2("one of --input or --manifold is required")
    return harness.sample_manifold(args.manifold, args.n, args.N, args.seed,
                                   args.mu, d=args.d, frame_seed=args.frame_seed)


class SystemExit2(RuntimeError):
    """Runtime failure that should exit with status 2."""


def _cmd_build_gmra(args) -> int:
    pts = _points_from_args(args)
    gmra = build_gmra(pts, args.d, args.jmax, args.seed)
    save_gmra(gmra, args.out)
    print(f"built GMRA: {gmra.num_levels} levels, N={gmra.ambient_dim}, "
          f"d={gmra.intrinsic_dim}, deepest level has {gmra.levels[-1].K} cells -> {args.out}")
    return 0


def _cmd_validate_gmra(args) -> int:
    gmra = load_gmra(args.gmra)
    args.d = gmra.intrinsic_dim
    args.N = gmra.ambient_dim
    pts = _points_from_args(args)
    report = validate_gmra(gmra, pts)
    print(f"{'j':>3} {'K':>7} {'sep*2^j':>10} {'K/2^(dj)':>10} {'parentC2':>9} "
          f"{'tube%':>7} {'mean err':>10}  flags")
    for s in report.levels:
        flags = []
        if s.separation_violation:
            flags.append("dup-centers")
        if s.parent_violation:
            flags.append("parent")
        err = report.mean_errors.get(s.j, float("nan"))
        print(f"{s.j:>3} {s.center_count:>7} {s.separation_ratio:>10.4g} "
              f"{s.count_ratio:>10.4g} {s.parent_ratio:>9.3g} "
              f"{100 * s.tube_fraction:>6.1f}% {err:>10.4g}  {','.join(flags) or '-'}")
    print(f"first level with 99% tube containment: {report.j0_estimate}")
    return 0


def _cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = harness.parse_config(fh.read())
    if args.out:
        cfg.out = args.out
    if not cfg.out:
        raise SystemExit2("no output path: set 'out' in the config or pass --out")
    rows = harness.run_experiment(cfg, threads=args.threads)
    print(f"wrote {len(rows)} rows -> {cfg.out}")
    return 0


def _cmd_width(args) -> int:
    pts = _points_from_args(args)
    est = harness.estimate_gaussian_width(pts, args.draws, args.seed)
    print(f"gaussian width estimate: {est.estimate:.6g} (stderr {est.stderr:.3g}, "
          f"{est.n_draws} draws)")
    print(f"rad(S) = {est.radius:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="manifold1bit",
                                     description="One-bit compressed sensing on manifolds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-gmra", help="build and save a GMRA")
    _add_point_source(p, n_default=20000)
    p.add_argument("--jmax", type=int, required=True)
    p.add_argument("--out", required=True, help="output GMRA file")
    p.set_defaults(func=_cmd_build_gmra)

    p = sub.add_parser("run", help="run an experiment sweep to CSV")
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--out", help="output CSV (overrides the config's 'out')")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate-gmra", help="report multiscale health statistics")
    p.add_argument("--gmra", required=True, help="GMRA file to validate")
    _add_point_source(p, n_default=1000)
    p.set_defaults(func=_cmd_validate_gmra)

    p = sub.add_parser("width", help="Monte Carlo Gaussian width of a point set")
    _add_point_source(p, n_default=100000)
    p.add_argument("--draws", type=int, default=200)
    p.set_defaults(func=_cmd_width)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
