"""Command-line interface: single refinement runs and timing sweeps.

Exit codes: 0 converged; 2 run failure (divergence, non-finite blowup,
iteration budget, solver separation failure); 3 input error (bad flags,
unreadable or malformed files, non-symmetric input to the symmetric
path).  Machine-readable output is one JSON record per run on stdout
(and appended to --out when given) with a versioned schema; human
diagnostics go to stderr.
"""

import argparse
import json
import math
import sys

from .generators import MatrixKind, MatrixSpec, generate
from .matmul import counters, reset_counters
from .mmio import MatrixMarketError
from .orthogonal import OrthoStrategy
from .refine import (
    NotSymmetric,
    RefineConfig,
    RefineStatus,
    refine_mixed,
    refine_symmetric,
    verify_pair,
)
from .trisolve import SeparationError

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_RUN_FAILURE = 2
EXIT_INPUT_ERROR = 3

_GEN_KINDS = ("randn", "randn-real", "wilkinson", "clustered")


# ---------------------------------------------------------------------------
# run records


def _num(x):
    """JSON-safe float: non-finite values serialize as null."""
    x = float(x)
    return x if math.isfinite(x) else None


def config_to_dict(cfg):
    return {
        "tol_factor": cfg.tol_factor,
        "max_iters": cfg.max_iters,
        "n_min": cfg.n_min,
        "clip_threshold": cfg.clip_threshold,
        "ortho": cfg.ortho.value,
        "skip_final_ortho": cfg.skip_final_ortho,
        "seed": cfg.seed,
        "restore_full_sigma": cfg.restore_full_sigma,
    }


def report_to_dict(rep):
    return {
        "iterations": rep.iterations,
        "residual_history": [[_num(e), _num(y)] for e, y in rep.residual_history],
        "hp_matmul_count": rep.hp_matmul_count,
        "clipped_total": rep.clipped_total,
        "status": rep.status.value,
        "wall_time": rep.wall_time,
        "skip_fired": rep.skip_fired,
        "detail": rep.detail,
    }


def residuals_to_dict(res):
    return {
        "ortho_residual": _num(res.ortho_residual),
        "tri_residual": _num(res.tri_residual),
        "similarity_residual": _num(res.similarity_residual),
    }


def build_run_record(spec, cfg, report, residuals, bench=None):
    rec = {
        "schema": SCHEMA_VERSION,
        "spec": spec.to_dict(),
        "config": config_to_dict(cfg),
        "report": report_to_dict(report),
        "residuals": residuals_to_dict(residuals),
    }
    if bench is not None:
        rec["bench"] = bench
    return rec


_SPEC_KEYS = {"kind", "n", "seed", "cluster_count", "cluster_size",
              "cluster_radius", "cond_x", "path"}
_CONFIG_KEYS = {"tol_factor", "max_iters", "n_min", "clip_threshold", "ortho",
                "skip_final_ortho", "seed", "restore_full_sigma"}
_REPORT_KEYS = {"iterations", "residual_history", "hp_matmul_count",
                "clipped_total", "status", "wall_time", "skip_fired", "detail"}
_RESIDUAL_KEYS = {"ortho_residual", "tri_residual", "similarity_residual"}
_STATUSES = {s.value for s in RefineStatus}


def _expect(cond, msg):
    if not cond:
        raise ValueError("invalid run record: %s" % msg)


def validate_run_record(rec):
    """Check a record against the documented schema; returns it unchanged."""
    _expect(isinstance(rec, dict), "not an object")
    extra = set(rec) - {"schema", "spec", "config", "report", "residuals",
                        "bench"}
    _expect(not extra, "unknown keys %s" % sorted(extra))
    _expect(rec.get("schema") == SCHEMA_VERSION,
            "schema must be %d" % SCHEMA_VERSION)
    spec = rec.get("spec")
    _expect(isinstance(spec, dict) and set(spec) == _SPEC_KEYS, "bad spec keys")
    _expect(spec["kind"] in {k.value for k in MatrixKind}, "bad spec kind")
    cfg = rec.get("config")
    _expect(isinstance(cfg, dict) and set(cfg) == _CONFIG_KEYS,
            "bad config keys")
    _expect(cfg["ortho"] in {s.value for s in OrthoStrategy}, "bad ortho")
    rep = rec.get("report")
    _expect(isinstance(rep, dict) and set(rep) == _REPORT_KEYS,
            "bad report keys")
    _expect(rep["status"] in _STATUSES, "bad status %r" % rep["status"])
    hist = rep["residual_history"]
    _expect(isinstance(hist, list) and
            all(isinstance(row, list) and len(row) == 2 for row in hist),
            "residual_history must be a list of pairs")
    _expect(len(hist) == rep["iterations"] + 1,
            "residual_history must have iterations + 1 rows")
    res = rec.get("residuals")
    _expect(isinstance(res, dict) and set(res) == _RESIDUAL_KEYS,
            "bad residual keys")
    if "bench" in rec:
        _expect(isinstance(rec["bench"], dict) and
                set(rec["bench"]) == {"hp_seconds", "lp_seconds",
                                      "hp_fraction"},
                "bad bench keys")
    return rec


# ---------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; 2 is reserved for run failures
    # here, so flag mistakes exit 3 like every other input error
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, "%s: error: %s\n" % (self.prog, message))


def build_parser():
    p = _Parser(prog="ddschur",
                description="Schur decomposition refined to pair precision")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("refine", help="refine one matrix and report")
    r.add_argument("--kind", choices=_GEN_KINDS,
                   help="generated input family")
    r.add_argument("--file", help="Matrix Market input file")
    r.add_argument("--n", type=int, help="matrix size for generated input")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--cluster-count", type=int, default=0)
    r.add_argument("--cluster-size", type=int, default=0)
    r.add_argument("--cluster-radius", type=float, default=1e-5)
    r.add_argument("--cond-x", type=float, default=1e5,
                   help="condition number of the similarity factor")
    r.add_argument("--clip", type=float, default=None, metavar="T",
                   help="zero correction entries larger than T")
    r.add_argument("--nmin", type=int, default=4,
                   help="blocked-solver base case size")
    r.add_argument("--max-iters", type=int, default=20)
    r.add_argument("--symmetric", action="store_true",
                   help="Hermitian driver (generated input is symmetrized)")
    r.add_argument("--ortho", choices=["ns", "qr"], default="ns")
    r.add_argument("--out", help="append the JSON record to this file")
    r.set_defaults(func=cmd_refine)

    b = sub.add_parser("bench", help="timing sweep over sizes")
    b.add_argument("--sizes", default="50,100,200",
                   help="comma-separated matrix sizes")
    b.add_argument("--kind", choices=["randn", "randn-real"], default="randn")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", help="append one JSON record per size")
    b.set_defaults(func=cmd_bench)
    return p


def _build_spec(args):
    if (args.file is None) == (args.kind is None):
        raise ValueError("choose exactly one of --kind and --file")
    if args.file is not None:
        return MatrixSpec(kind=MatrixKind.FROM_FILE, path=args.file,
                          seed=args.seed)
    if args.n is None:
        raise ValueError("--kind needs --n")
    kw = {}
    if args.kind == "clustered":
        kw = dict(cluster_count=args.cluster_count,
                  cluster_size=args.cluster_size,
                  cluster_radius=args.cluster_radius,
                  cond_x=args.cond_x)
    return MatrixSpec(kind=args.kind, n=args.n, seed=args.seed, **kw)


def _config_from(args):
    return RefineConfig(max_iters=args.max_iters, n_min=args.nmin,
                        clip_threshold=args.clip,
                        ortho=OrthoStrategy(args.ortho), seed=args.seed)


def _emit(record, out_path):
    validate_run_record(record)
    line = json.dumps(record, sort_keys=True)
    print(line)
    if out_path:
        with open(out_path, "a", encoding="ascii") as f:
            f.write(line + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_refine(args):
    try:
        spec = _build_spec(args)
        a = generate(spec)
    except (ValueError, MatrixMarketError, OSError) as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT_ERROR
    cfg = _config_from(args)
    if args.symmetric and spec.kind is not MatrixKind.FROM_FILE:
        a = (a + a.conj_t()).scale(0.5)
    try:
        if args.symmetric:
            pair, report = refine_symmetric(a, cfg)
        else:
            pair, report = refine_mixed(a, cfg)
    except NotSymmetric as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT_ERROR
    except SeparationError as exc:
        print("run failed: %s" % exc, file=sys.stderr)
        return EXIT_RUN_FAILURE
    residuals = verify_pair(a, pair)
    try:
        _emit(build_run_record(spec, cfg, report, residuals), args.out)
    except OSError as exc:
        print("input error: cannot write %s: %s" % (args.out, exc),
              file=sys.stderr)
        return EXIT_INPUT_ERROR
    print("status %s after %d iterations (%d hp matmuls)"
          % (report.status.value, report.iterations, report.hp_matmul_count),
          file=sys.stderr)
    if report.detail:
        print(report.detail, file=sys.stderr)
    return EXIT_OK if report.status is RefineStatus.CONVERGED \
        else EXIT_RUN_FAILURE


def _parse_sizes(text):
    try:
        sizes = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValueError("bad --sizes %r" % text)
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError("sizes must be positive integers")
    return sizes


def cmd_bench(args):
    try:
        sizes = _parse_sizes(args.sizes)
    except ValueError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT_ERROR
    # one throwaway run so kernel compilation never lands in a timed row
    warm = MatrixSpec(kind=args.kind, n=8, seed=args.seed)
    refine_mixed(generate(warm), RefineConfig(seed=args.seed))
    header = ("%6s %6s %4s %11s %10s %9s %12s %12s"
              % ("n", "iters", "hp", "wall_s", "hp_gemm_s", "fraction",
                 "tri", "ortho"))
    print(header, file=sys.stderr)
    worst = EXIT_OK
    for n in sizes:
        spec = MatrixSpec(kind=args.kind, n=n, seed=args.seed)
        a = generate(spec)
        cfg = RefineConfig(seed=args.seed)
        reset_counters()
        before = counters()
        try:
            pair, report = refine_mixed(a, cfg)
        except SeparationError as exc:
            print("n=%d failed: %s" % (n, exc), file=sys.stderr)
            worst = EXIT_RUN_FAILURE
            continue
        after = counters()
        residuals = verify_pair(a, pair)
        hp_seconds = after["hp_seconds"] - before["hp_seconds"]
        lp_seconds = after["lp_seconds"] - before["lp_seconds"]
        fraction = hp_seconds / report.wall_time if report.wall_time > 0 \
            else 0.0
        bench = {"hp_seconds": hp_seconds, "lp_seconds": lp_seconds,
                 "hp_fraction": fraction}
        try:
            _emit(build_run_record(spec, cfg, report, residuals, bench=bench),
                  args.out)
        except OSError as exc:
            print("input error: cannot write %s: %s" % (args.out, exc),
                  file=sys.stderr)
            return EXIT_INPUT_ERROR
        tri = residuals.tri_residual
        ortho = residuals.ortho_residual
        print("%6d %6d %4d %11.3f %10.3f %9.3f %12.3e %12.3e"
              % (n, report.iterations, report.hp_matmul_count,
                 report.wall_time, hp_seconds, fraction, tri, ortho),
              file=sys.stderr)
        if report.status is not RefineStatus.CONVERGED:
            worst = EXIT_RUN_FAILURE
    return worst


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
