"""``tubal`` command line.

Exit codes: 0 success (solvers: converged), 2 solver stopped at
``--max-iters`` without converging, 1 usage, I/O or data errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import TubalError
from .io import load_tensor, save_tensor, write_json, write_text
from .metrics import report
from .solvers import DEFAULT_EPSILON, DEFAULT_MAX_ITERS, SolverConfig, complete, rpca
from .synth import SUCCESS_THRESHOLD, corrupt_sparse, gen_low_tubal_rank, phase_diagram, sample_mask
from .t_algebra import default_rank_tol, fourier_singular_values, identity_tensor, pstnn, tnn

log = logging.getLogger("tubal")

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _dims(text):
    try:
        dims = tuple(int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must look like 30x30x20, got {text!r}")
    if len(dims) != 3 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"dims must be three positive integers, got {text!r}")
    return dims


def _n_target(text):
    try:
        values = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"n-target must be an integer or a comma list, got {text!r}")
    return values[0] if len(values) == 1 else tuple(values)


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def parse_grid(text: str, task: str) -> dict:
    """Grid spec from a JSON file or an inline ``dims=30x30x20;ranks=1,2;rates=0.1,0.9`` string.

    ``rates``, ``sparsities`` and ``levels`` are synonyms for the second axis.
    """
    path = Path(text)
    if path.is_file():
        raw = json.loads(path.read_text(encoding="utf-8"))
    else:
        raw = {}
        for part in text.split(";"):
            if not part.strip():
                continue
            if "=" not in part:
                raise UsageError(f"malformed grid spec item {part!r}")
            key, value = part.split("=", 1)
            raw[key.strip()] = value.strip()
    try:
        dims = raw.get("dims", "30x30x20" if task == "tc" else "40x40x20")
        dims = _dims(dims) if isinstance(dims, str) else tuple(int(d) for d in dims)
        ranks = raw["ranks"]
        ranks = _int_list(ranks) if isinstance(ranks, str) else [int(r) for r in ranks]
        key = next(k for k in ("rates", "sparsities", "levels") if k in raw)
        levels = raw[key]
        levels = _float_list(levels) if isinstance(levels, str) else [float(v) for v in levels]
    except (KeyError, StopIteration, ValueError, TypeError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"malformed grid spec {text!r}: {exc}") from exc
    if not ranks or not levels:
        raise UsageError("grid spec needs non-empty ranks and rates/sparsities")
    return {"dims": dims, "ranks": ranks, "levels": levels}


def _write_manifest(path, args, argv, inputs, outputs, config, started, extra=None):
    manifest = {
        "command": args.command if not getattr(args, "kind", None) else f"{args.command} {args.kind}",
        "argv": list(argv),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "config": config,
        "seed": config.get("seed") if isinstance(config, dict) else None,
        "version": __version__,
        "duration_s": round(time.perf_counter() - started, 6),
    }
    if extra:
        manifest.update(extra)
    write_json(path, manifest)


def _manifest_path(args, primary):
    return Path(args.manifest) if args.manifest else Path(f"{primary}.manifest.json")


def _metric_dict(y, truth):
    return report(y, truth).to_dict()


def _solver_config(args):
    return SolverConfig(
        n_target=args.n_target,
        beta=args.beta,
        lam=getattr(args, "lam", None),
        epsilon=args.eps,
        max_iters=args.max_iters,
        seed=getattr(args, "seed", 0),
    )


def cmd_complete(args, argv, started):
    o = load_tensor(args.input)
    mask = load_tensor(args.mask) != 0
    if mask.shape != o.shape:
        raise UsageError(f"mask dims {mask.shape} do not match input dims {o.shape}")
    cfg = _solver_config(args)
    result = complete(o, mask, cfg)
    output = Path(args.output or Path(args.input).with_suffix(".completed.t3b"))
    save_tensor(result.x, output)
    outputs = [output]
    rep = {"iterations": result.iterations, "converged": result.converged}
    inputs = [args.input, args.mask]
    if args.truth:
        rep.update(_metric_dict(result.x, load_tensor(args.truth)))
        inputs.append(args.truth)
    if args.report:
        write_json(args.report, rep)
        outputs.append(Path(args.report))
    else:
        print(json.dumps(rep, sort_keys=True))
    _write_manifest(_manifest_path(args, output), args, argv, inputs, outputs, result.config.to_dict(), started)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_rpca(args, argv, started):
    o = load_tensor(args.input)
    cfg = _solver_config(args)
    result = rpca(o, cfg)
    stem = Path(args.input).with_suffix("")
    out_l = Path(args.output_l or f"{stem}.lowrank.t3b")
    out_e = Path(args.output_e or f"{stem}.sparse.t3b")
    save_tensor(result.l, out_l)
    save_tensor(result.e, out_e)
    outputs = [out_l, out_e]
    rep = {
        "iterations": result.iterations,
        "converged": result.converged,
        "residual": float(result.trace[-1, 2]),
    }
    inputs = [args.input]
    if args.truth:
        rep.update(_metric_dict(result.l, load_tensor(args.truth)))
        inputs.append(args.truth)
    if args.report:
        write_json(args.report, rep)
        outputs.append(Path(args.report))
    else:
        print(json.dumps(rep, sort_keys=True))
    _write_manifest(_manifest_path(args, out_l), args, argv, inputs, outputs, result.config.to_dict(), started)
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _sibling(path: Path, tag: str) -> Path:
    return path.with_name(f"{path.stem}_{tag}{path.suffix or '.csv'}")


def cmd_bench(args, argv, started):
    grid = parse_grid(args.grid, args.kind)
    solver = {"beta": args.beta, "epsilon": args.eps, "max_iters": args.max_iters}
    if args.kind == "rpca":
        solver["lam"] = args.lam
    common = dict(trials=args.trials, seed=args.seed, threshold=args.threshold, jobs=args.jobs, **solver)
    grids = {}
    for method in ("pstnn", "tnn"):
        log.info("bench %s: %s grid %s", args.kind, method, grid)
        grids[method] = phase_diagram(args.kind, grid["dims"], grid["ranks"], grid["levels"], method=method, **common)
    out = Path(args.out)
    paths = {"pstnn": out, "tnn": _sibling(out, "tnn"), "delta": _sibling(out, "delta")}
    write_text(paths["pstnn"], grids["pstnn"].to_csv())
    write_text(paths["tnn"], grids["tnn"].to_csv())
    write_text(paths["delta"], grids["pstnn"].minus(grids["tnn"]).to_csv())
    config = {
        "task": args.kind,
        "dims": list(grid["dims"]),
        "ranks": grid["ranks"],
        "levels": grid["levels"],
        "trials": args.trials,
        "seed": args.seed,
        "threshold": args.threshold,
        "beta": args.beta,
        "lambda": args.lam if args.kind == "rpca" else None,
        "epsilon": args.eps,
        "max_iters": args.max_iters,
    }
    totals = {m: g.total() for m, g in grids.items()}
    print(f"success totals: pstnn={totals['pstnn']:g} tnn={totals['tnn']:g}")
    # duration and job count vary between reruns; they stay out of the CSVs
    _write_manifest(
        _manifest_path(args, out), args, argv, [], list(paths.values()), config, started,
        extra={"jobs": args.jobs, "totals": totals},
    )
    return EXIT_OK


def cmd_gen(args, argv, started):
    inputs = []
    if args.kind == "lowrank":
        t = gen_low_tubal_rank(*args.dims, args.rank, args.seed)
        config = {"dims": list(args.dims), "rank": args.rank, "seed": args.seed}
    elif args.kind == "mask":
        t = sample_mask(args.dims, args.rate, args.seed).astype(np.float64)
        config = {"dims": list(args.dims), "rate": args.rate, "seed": args.seed}
    elif args.kind == "corrupt":
        a = load_tensor(args.input)
        inputs.append(args.input)
        t, where = corrupt_sparse(a, args.sparsity, (args.low, args.high), args.seed)
        config = {"sparsity": args.sparsity, "range": [args.low, args.high], "seed": args.seed}
        if args.output_mask:
            save_tensor(where.astype(np.float64), args.output_mask)
    else:
        t = identity_tensor(args.n, args.n3)
        config = {"n": args.n, "n3": args.n3}
    save_tensor(t, args.output)
    outputs = [Path(args.output)] + ([Path(args.output_mask)] if getattr(args, "output_mask", None) else [])
    _write_manifest(_manifest_path(args, args.output), args, argv, inputs, outputs, config, started)
    return EXIT_OK


def cmd_info(args, argv, started):
    t = load_tensor(args.path)
    sv = fourier_singular_values(t)
    tol = args.tol if args.tol is not None else default_rank_tol(t, sv)
    ranks = np.count_nonzero(sv > tol, axis=1)
    info = {
        "dims": list(t.shape),
        "tubal_rank": int(ranks.max()),
        "multi_rank": [int(r) for r in ranks],
        "rank_tol": tol,
        "tnn": tnn(t),
        "fro_norm": float(np.linalg.norm(t)),
    }
    if args.n_target is not None:
        info["n_target"] = args.n_target if isinstance(args.n_target, int) else list(args.n_target)
        info["pstnn"] = pstnn(t, args.n_target)
    if args.json:
        print(json.dumps(info, sort_keys=True))
    else:
        for key, value in info.items():
            if isinstance(value, list):
                value = "(" + ", ".join(str(v) for v in value) + ")"
            print(f"{key}: {value}")
    if args.manifest:
        _write_manifest(args.manifest, args, argv, [args.path], [], {"tol": tol}, started)
    return EXIT_OK


def cmd_metrics(args, argv, started):
    rep = _metric_dict(load_tensor(args.a), load_tensor(args.b))
    text = json.dumps(rep, sort_keys=True)
    print(text)
    if args.report:
        write_json(args.report, rep)
    if args.manifest:
        outputs = [args.report] if args.report else []
        _write_manifest(args.manifest, args, argv, [args.a, args.b], outputs, {}, started)
    return EXIT_OK


def cmd_replay(args, argv, started):
    manifest = json.loads(Path(args.manifest_file).read_text(encoding="utf-8"))
    recorded = manifest.get("argv")
    if not recorded or recorded[0] == "replay":
        raise UsageError(f"{args.manifest_file}: no replayable command recorded")
    return main(recorded)


def _add_solver_flags(p):
    p.add_argument("--n-target", type=_n_target, required=True,
                   help="untouched singular values per Fourier slice (integer or comma list)")
    p.add_argument("--beta", type=float, default=None,
                   help="ADMM penalty (default 0.1 for complete, 0.3 for rpca)")
    p.add_argument("--eps", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    p.add_argument("--truth", help="ground truth tensor; adds PSNR/SSIM/RSE to the report")
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.add_argument("--manifest", help="manifest path (default: next to the first output)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tubal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("complete", help="PSTNN tensor completion")
    p.add_argument("--input", required=True, help="observed tensor (.t3b or PGM directory)")
    p.add_argument("--mask", required=True, help=".t3b tensor, nonzero = observed")
    p.add_argument("--seed", type=int, default=0, help="seed of the random initialization")
    p.add_argument("--output")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("rpca", help="PSTNN tensor robust PCA")
    p.add_argument("--input", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="sparsity weight (default 1/sqrt(max(n1,n2)*n3))")
    p.add_argument("--output-l")
    p.add_argument("--output-e")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_rpca)

    p = sub.add_parser("bench", help="phase-transition grids for PSTNN and TNN")
    p.add_argument("kind", choices=("tc", "rpca"))
    p.add_argument("--grid", required=True,
                   help="JSON file or 'dims=30x30x20;ranks=1,2,4;rates=0.1,0.5,0.9'")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--out", required=True, help="PSTNN grid CSV; _tnn and _delta siblings are written too")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=int(os.environ.get("TUBAL_JOBS", "1")))
    p.add_argument("--threshold", type=float, default=SUCCESS_THRESHOLD)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--eps", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="write seeded synthetic fixtures")
    gsub = p.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    g = gsub.add_parser("lowrank", help="P * Q with Gaussian factors")
    g.add_argument("--dims", type=_dims, required=True)
    g.add_argument("--rank", type=int, required=True)
    g = gsub.add_parser("mask", help="uniform sampling mask (1 = observed)")
    g.add_argument("--dims", type=_dims, required=True)
    g.add_argument("--rate", type=float, required=True)
    g = gsub.add_parser("corrupt", help="sparse uniform noise")
    g.add_argument("--input", required=True)
    g.add_argument("--sparsity", type=float, required=True)
    g.add_argument("--low", type=float, default=-1.0)
    g.add_argument("--high", type=float, default=1.0)
    g.add_argument("--output-mask", help="also write the corrupted-entry indicator")
    g = gsub.add_parser("identity", help="identity tensor")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--n3", type=int, required=True)
    for g in gsub.choices.values():
        g.add_argument("--seed", type=int, default=0)
        g.add_argument("--output", required=True)
        g.add_argument("--manifest")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("info", help="dims, ranks, TNN and PSTNN of a tensor")
    p.add_argument("path")
    p.add_argument("--n-target", type=_n_target, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("metrics", help="PSNR, SSIM and RSE of an estimate against a reference")
    p.add_argument("--a", required=True, help="estimate")
    p.add_argument("--b", required=True, help="reference")
    p.add_argument("--report")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    started = time.perf_counter()
    try:
        return args.func(args, argv, started)
    except (TubalError, UsageError, OSError, ValueError) as exc:
        print(f"tubal: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
