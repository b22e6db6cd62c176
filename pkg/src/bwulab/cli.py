"""Command line entry point: ``bwulab <subcommand> [--config FILE] ...``.

Exit codes: 0 all assertions pass, 2 assertion failures, 3 configuration error."""
from __future__ import annotations

import argparse
import logging
import sys

from .grammar import GrammarError
from .harness import ConfigError, ExperimentConfig, make_corpus, run, write_corpus

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 2, 3


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--out-dir", default="reports", help="directory for CSV/JSON reports")
    p.add_argument("--threads", type=int, default=1, help="worker threads for row evaluation")
    p.add_argument("--refine", action="store_true",
                   help="echo the run at h/2 and sqrt(rho) and report relative changes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _grid_flags(p):
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--h", type=float, default=1 / 64)
    p.add_argument("--R-max", type=float, default=8.0)
    p.add_argument("--corpus-file", action="append", default=[],
                   help="grid-function file (repeatable); replaces the default corpus")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="bwulab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common], help="global norms over the corpus")
    _grid_flags(p)
    p.add_argument("--space", default="Lp{p=1}")
    p.add_argument("--weight", default="power{sigma=1}")
    p.add_argument("--u", default="inf")
    p.add_argument("--nonhomogeneous", action="store_true")
    p.add_argument("--tail", action="store_true")
    p.add_argument("--expect-value", type=float)

    p = sub.add_parser("classcheck", parents=[common], help="weight and Theta class probes")
    p.add_argument("--weight", action="append", default=[])
    p.add_argument("--theta", action="append", default=[])

    p = sub.add_parser("decompose", parents=[common], help="decomposition constants")
    _grid_flags(p)
    p.add_argument("--space", action="append", default=[])

    p = sub.add_parser("sandwich", parents=[common], help="interpolation sandwich (config)")
    _grid_flags(p)

    p = sub.add_parser("operator", parents=[common], help="operator boundedness table")
    _grid_flags(p)
    p.add_argument("--op", default="maximal")
    p.add_argument("--source", default="Morrey{p=2, lam=-0.25}")
    p.add_argument("--target", default="Morrey{p=2, lam=-0.25}")
    p.add_argument("--weight",
                   default="composite{w0=power{sigma=0.2}, w1=power{sigma=0.1}, "
                           "theta=power{theta=0.5}}")
    p.add_argument("--u", default="2")

    p = sub.add_parser("hardy", parents=[common], help="Muckenhoupt condition and ratios")
    p.add_argument("--U", default="1,-1", help="c,e for U(t) = c t^e")
    p.add_argument("--V", default="1,0", help="c,e for V(t) = c t^e")
    p.add_argument("--p", default="2")
    p.add_argument("--direction", default="F_star_up", choices=["F_star_up", "F_star_down"])

    p = sub.add_parser("corpus", parents=[common], help="write the corpus in grid format")
    _grid_flags(p)

    p = sub.add_parser("suite", parents=[common], help="acceptance checks 1-9")
    p.add_argument("--quick", action="store_true", help="fewer brute-force seeds")
    return ap


def _grid(args) -> dict:
    return {"dim": args.dim, "h": args.h, "R_max": args.R_max}


def _corpus_fields(args) -> dict:
    if args.corpus_file:
        return {"corpus": [], "corpus_files": tuple(args.corpus_file)}
    return {}


def config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if cfg.kind != args.command:
            raise ConfigError(f"kind: config is {cfg.kind!r} but subcommand is {args.command!r}")
        return cfg
    c = args.command
    if c == "norm":
        params = {"space": args.space, "weight": args.weight, "u": args.u,
                  "homogeneous": not args.nonhomogeneous, "tail": args.tail}
        if args.expect_value is not None:
            params["expect_value"] = args.expect_value
        return ExperimentConfig("norm", grid=_grid(args), params=params, **_corpus_fields(args))
    if c == "classcheck":
        if not args.weight and not args.theta:
            raise ConfigError("params.weights: give --weight or --theta")
        return ExperimentConfig("classcheck", params={"weights": args.weight,
                                                      "thetas": args.theta})
    if c == "decompose":
        spaces = args.space or ["Campanato{p=2, lam=-0.25}"]
        return ExperimentConfig("decompose", grid=_grid(args), params={"spaces": spaces},
                                **_corpus_fields(args))
    if c == "sandwich":
        tuples = [{"w0": "power{sigma=2}", "w1": "power{sigma=0.5}",
                   "theta": "power{theta=0.5}", "u": "inf"},
                  {"w0": "power{sigma=2}", "w1": "power{sigma=0.5}",
                   "theta": "max_powers{alpha=0.25, beta=0.75}", "u": 2, "u0": 2, "u1": 2}]
        return ExperimentConfig("sandwich", grid=_grid(args), params={"tuples": tuples},
                                **_corpus_fields(args))
    if c == "operator":
        t = {"operator": args.op, "source": args.source, "target": args.target,
             "weight": args.weight, "u": args.u}
        return ExperimentConfig("operator", grid=_grid(args), params={"tuples": [t]},
                                **_corpus_fields(args))
    if c == "hardy":
        try:
            U = [float(x) for x in args.U.split(",")]
            V = [float(x) for x in args.V.split(",")]
        except ValueError as exc:
            raise ConfigError("params.pairs: --U/--V must be 'c,e'") from exc
        pair = {"U": U, "V": V, "p": args.p, "direction": args.direction,
                "tests": [[1, 2], [0.25, 0.5], [2, 8]]}
        return ExperimentConfig("hardy", params={"pairs": [pair]},
                                window={"r_min": 1 / 64, "r_max": 64, "rho": 2 ** 0.25})
    if c == "suite":
        return ExperimentConfig("suite", params={"quick": args.quick})
    raise ConfigError(f"kind: unsupported subcommand {c!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "corpus":
            if args.config:
                cfg = ExperimentConfig.load(args.config)
                corpus = cfg.make_corpus()
            else:
                corpus = make_corpus("default", args.dim, args.h, args.R_max,
                                     args.corpus_file)
            for path in write_corpus(corpus, args.out_dir):
                print(path)
            return EXIT_OK
        cfg = config_from_args(args)
        rep = run(cfg, threads=args.threads, refine=args.refine, out_dir=args.out_dir)
    except (ConfigError, GrammarError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.kind == "suite":
        for r in rep.rows:
            tag = "PASS" if r["passed"] else "FAIL"
            print(f"criterion {r['criterion']} [{tag}] {r['title']}: {r['detail']}")
    else:
        print(f"{cfg.kind}: {len(rep.rows)} rows, passed={rep.passed}, "
              f"hash={rep.config_hash[:12]}, {rep.wall_clock:.2f}s")
        for k, v in rep.deltas.items():
            print(f"  refinement change {k}: {v:.4g}")
    for msg in rep.failures:
        print(f"  failure: {msg}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
