"""Command-line front end: simulate, test, benchmark, power-curve, permute.

Every run writes a ``manifest.json`` with the resolved parameters, seed and
package version; re-running a command with ``--config manifest.json`` (plus a
fresh ``--output-dir``) reproduces the outputs byte for byte. Data files are
plain delimited text, rows = samples, columns = variables, with an optional
header naming the variables.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import SampleMatrix, standardize
from .errors import (DataFormatError, DimensionMismatch, GgmDiffError,
                     InfeasibleTargets, NonFiniteInput)
from .evaluate import (ScenarioConfig, benchmark, derive_seed,
                       permutation_test, power_curve, run_method)
from .ggm import BoundsConfig, METHOD_FUSED, METHOD_LASSO, select_edges
from .simulate import generate_ggm_pair, sample_dataset

FLOAT_FMT = "%.17g"


class ConfigError(Exception):
    """Invalid command parameters."""


# ------------------------------------------------------------------ #
# argument plumbing
# ------------------------------------------------------------------ #

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--output-dir", default=".", help="directory for result files")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--config", default=None,
                   help="JSON config file; its values override flags")


def _add_scenario(p: argparse.ArgumentParser):
    p.add_argument("--p", type=int, default=40, help="number of graph nodes")
    p.add_argument("--n1", type=int, default=800, help="samples in group A")
    p.add_argument("--n2", type=int, default=60, help="samples in group B")
    p.add_argument("--sparsity", type=float, default=0.19,
                   help="individual edge density target")
    p.add_argument("--diff-sparsity", type=float, default=0.03,
                   help="difference edge density target")


def _add_method(p: argparse.ArgumentParser):
    p.add_argument("--method", choices=["lasso", "fused", "both"], default="both")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--k-grid", default=None,
                   help="comma-separated CV grid (default: 10 log points 0.1..100)")
    p.add_argument("--bounds-c", type=float, default=2.0)
    p.add_argument("--bounds-a", type=float, default=2.0)
    p.add_argument("--bounds-sd", type=int, default=2)
    p.add_argument("--bounds-s12", type=int, default=15)
    p.add_argument("--bounds-m", type=float, default=0.01)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ggmdiff",
                                 description="Edge-difference testing for "
                                             "Gaussian graphical models")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate a synthetic dataset pair")
    _add_common(sp)
    _add_scenario(sp)

    tp = sub.add_parser("test", help="run difference tests on two data files")
    _add_common(tp)
    _add_method(tp)
    tp.add_argument("--input-a", required=True)
    tp.add_argument("--input-b", required=True)
    tp.add_argument("--correction", choices=["none", "bh"], default="none")

    bp = sub.add_parser("benchmark", help="replicated synthetic study")
    _add_common(bp)
    _add_scenario(bp)
    _add_method(bp)
    bp.add_argument("--replicates", type=int, default=50)

    pp = sub.add_parser("power-curve", help="power versus group-B sample size")
    _add_common(pp)
    _add_scenario(pp)
    _add_method(pp)
    pp.add_argument("--replicates", type=int, default=20)
    pp.add_argument("--n2-grid", default="20,30,40,50,60,70,80,90,100,110,120,130,140,150")

    mp = sub.add_parser("permute", help="permutation calibration scatter")
    _add_common(mp)
    _add_scenario(mp)
    _add_method(mp)
    mp.add_argument("--replicates", type=int, default=199,
                    help="number of permutations")
    mp.add_argument("--input-a", default=None)
    mp.add_argument("--input-b", default=None)

    return ap


def _apply_config(args: argparse.Namespace, parser_keys: set[str]):
    """Overlay a JSON config (or a previous manifest) onto parsed flags."""
    if not args.config:
        return
    try:
        raw = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    params = raw.get("params") if "params" in raw and isinstance(raw.get("params"), dict) else raw
    if "command" in raw and raw["command"] != args.command:
        raise ConfigError(f"config is for command {raw['command']!r}, "
                          f"not {args.command!r}")
    for key, value in params.items():
        attr = key.replace("-", "_")
        if attr in ("command", "version", "tool", "output_dir"):
            continue
        if attr not in parser_keys:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(args, attr, value)


def _manifest_params(args: argparse.Namespace) -> dict:
    skip = {"command", "config", "output_dir"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_manifest(outdir: Path, args: argparse.Namespace):
    doc = {"tool": "ggmdiff", "version": __version__, "command": args.command,
           "params": _manifest_params(args)}
    (outdir / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------------ #
# file I/O
# ------------------------------------------------------------------ #

def read_matrix(path: str) -> np.ndarray:
    """Delimited numeric matrix; header row and comma/whitespace both accepted."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read: {exc}", path=path) from exc
    rows = []
    ncol = None
    skipped_header = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",") if "," in line else line.split()
        try:
            row = [float(tok) for tok in parts]
        except ValueError:
            if not skipped_header and not rows:
                skipped_header = True
                continue
            raise DataFormatError("non-numeric entry", path=path, line=lineno)
        if ncol is None:
            ncol = len(row)
        elif len(row) != ncol:
            raise DataFormatError(
                f"expected {ncol} columns, found {len(row)}", path=path, line=lineno)
        rows.append(row)
    if not rows:
        raise DataFormatError("no data rows", path=path)
    return np.asarray(rows, dtype=np.float64)


def write_matrix(path: Path, mat: np.ndarray, header: str | None = None):
    with open(path, "w") as fh:
        if header:
            fh.write(header + "\n")
        for row in np.atleast_2d(mat):
            fh.write(",".join(FLOAT_FMT % x for x in row) + "\n")


def _load_standardized(path: str) -> SampleMatrix:
    raw = read_matrix(path)
    try:
        return standardize(raw)
    except (NonFiniteInput, DimensionMismatch, GgmDiffError) as exc:
        raise DataFormatError(str(exc), path=path) from exc


# ------------------------------------------------------------------ #
# shared parameter resolution
# ------------------------------------------------------------------ #

def _positive(name: str, value, strict: bool = True):
    if value is None or (value <= 0 if strict else value < 0):
        raise ConfigError(f"--{name} must be {'positive' if strict else 'nonnegative'}")
    return value


def _parse_grid(text, cast):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        vals = [cast(v) for v in text]
    else:
        try:
            vals = [cast(tok) for tok in str(text).split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad grid value: {exc}") from exc
    if not vals:
        raise ConfigError("grid must be nonempty")
    return vals


def _scenario_from(args) -> ScenarioConfig:
    _positive("p", args.p)
    if args.p < 4:
        raise ConfigError("--p must be at least 4")
    _positive("n1", args.n1)
    _positive("n2", args.n2)
    if not 0 < args.sparsity < 1:
        raise ConfigError("--sparsity must lie in (0, 1)")
    if not 0 <= args.diff_sparsity <= args.sparsity:
        raise ConfigError("--diff-sparsity must lie in [0, sparsity]")
    kw = {}
    if hasattr(args, "alpha"):
        if not 0 < args.alpha < 1:
            raise ConfigError("--alpha must lie in (0, 1)")
        kw["alpha"] = args.alpha
        k_grid = _parse_grid(args.k_grid, float)
        if k_grid is not None:
            if min(k_grid) <= 0:
                raise ConfigError("--k-grid values must be positive")
            kw["k_grid"] = tuple(k_grid)
        if not (args.bounds_c > 1 and args.bounds_a > 1):
            raise ConfigError("--bounds-c and --bounds-a must exceed 1")
        if args.bounds_sd <= 0 or args.bounds_s12 <= 0:
            raise ConfigError("--bounds-sd and --bounds-s12 must be positive")
        if not 0 < args.bounds_m < 1:
            raise ConfigError("--bounds-m must lie in (0, 1)")
        kw["bounds"] = BoundsConfig(c=args.bounds_c, a=args.bounds_a,
                                    s_d=args.bounds_sd, s_12=args.bounds_s12,
                                    m=args.bounds_m)
    return ScenarioConfig(p=args.p, n1=args.n1, n2=args.n2,
                          sparsity=args.sparsity, diff_sparsity=args.diff_sparsity,
                          **kw)


def _methods_from(args) -> tuple[str, ...]:
    if args.method == "both":
        return (METHOD_LASSO, METHOD_FUSED)
    return (args.method,)


def _threads_from(args) -> int:
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    return args.threads


# ------------------------------------------------------------------ #
# commands
# ------------------------------------------------------------------ #

def cmd_simulate(args) -> int:
    scenario = _scenario_from(args)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    truth = generate_ggm_pair(scenario.p, scenario.sparsity, scenario.diff_sparsity,
                              derive_seed(args.seed, 0))
    X1, X2 = sample_dataset(truth, scenario.n1, scenario.n2, derive_seed(args.seed, 1))
    header = ",".join(f"x{j}" for j in range(scenario.p))
    write_matrix(outdir / "data_a.csv", X1.data, header)
    write_matrix(outdir / "data_b.csv", X2.data, header)
    doc = {
        "p": truth.p, "seed": args.seed,
        "sparsity": scenario.sparsity, "diff_sparsity": scenario.diff_sparsity,
        "S1": sorted(map(list, truth.S1)), "S2": sorted(map(list, truth.S2)),
        "Sd": sorted(map(list, truth.Sd)),
        "theta1": truth.theta1.tolist(), "theta2": truth.theta2.tolist(),
    }
    (outdir / "truth.json").write_text(json.dumps(doc, sort_keys=True) + "\n")
    _write_manifest(outdir, args)
    print(f"wrote data_a.csv ({scenario.n1}x{scenario.p}), "
          f"data_b.csv ({scenario.n2}x{scenario.p}), truth.json to {outdir}")
    return 0


def _stats_outputs(outdir: Path, method: str, stats, selected, correction: str):
    write_matrix(outdir / f"z_{method}.csv", stats.B)
    write_matrix(outdir / f"pvals_{method}.csv", stats.pvals)
    with open(outdir / f"selected_{method}.csv", "w") as fh:
        fh.write(f"# correction={correction}\n")
        fh.write("node,other,z,pval\n")
        p = stats.p
        for v in range(p):
            for col in range(p - 1):
                if selected[v, col]:
                    j = stats.entry_node(v, col)
                    fh.write(f"{v},{j},{FLOAT_FMT % stats.B[v, col]},"
                             f"{FLOAT_FMT % stats.pvals[v, col]}\n")


def cmd_test(args) -> int:
    scenario_defaults = argparse.Namespace(**vars(args))
    X1 = _load_standardized(args.input_a)
    X2 = _load_standardized(args.input_b)
    if X1.p != X2.p:
        raise DataFormatError(
            f"column counts differ: {X1.p} vs {X2.p}", path=args.input_b)
    scenario_defaults.p = max(X1.p, 4)
    scenario_defaults.n1 = X1.n
    scenario_defaults.n2 = X2.n
    scenario_defaults.sparsity = 0.19
    scenario_defaults.diff_sparsity = 0.03
    scenario = _scenario_from(scenario_defaults)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    for method in _methods_from(args):
        stats = run_method(method, X1, X2, scenario, derive_seed(args.seed, 2))
        selected = select_edges(stats, args.alpha, args.correction)
        _stats_outputs(outdir, method, stats, selected, args.correction)
        print(f"{method}: {int(selected.sum())} selected entries "
              f"at alpha={args.alpha} ({args.correction})")
    _write_manifest(outdir, args)
    return 0


def cmd_benchmark(args) -> int:
    scenario = _scenario_from(args)
    _positive("replicates", args.replicates)
    methods = _methods_from(args)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    reports = benchmark(scenario, args.replicates, args.seed, methods,
                        threads=_threads_from(args))
    cols = ["method", "fp_rate", "power", "coverage_S", "coverage_Sdc",
            "len_S", "len_Sdc", "replicates"]
    with open(outdir / "benchmark.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for method in methods:
            r = reports[method]
            fh.write(",".join([method] + [FLOAT_FMT % getattr(r, c) for c in cols[1:-1]]
                              + [str(r.replicates)]) + "\n")
    lines = [f"{'method':<8} {'FP':>7} {'power':>7} {'cov S':>7} {'cov Sdc':>8} "
             f"{'len S':>7} {'len Sdc':>8}"]
    for method in methods:
        r = reports[method]
        lines.append(f"{method:<8} {r.fp_rate:>6.1%} {r.power:>6.1%} "
                     f"{r.coverage_S:>6.1%} {r.coverage_Sdc:>7.1%} "
                     f"{r.len_S:>7.3f} {r.len_Sdc:>8.3f}")
    summary = "\n".join(lines) + "\n"
    (outdir / "benchmark.txt").write_text(summary)
    _write_manifest(outdir, args)
    print(summary, end="")
    return 0


def cmd_power_curve(args) -> int:
    scenario = _scenario_from(args)
    _positive("replicates", args.replicates)
    grid = _parse_grid(args.n2_grid, int)
    if any(g < 2 for g in grid):
        raise ConfigError("--n2-grid entries must be at least 2")
    methods = _methods_from(args)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    points = power_curve(scenario, grid, args.replicates, args.seed, methods,
                         threads=_threads_from(args))
    with open(outdir / "power_curve.csv", "w") as fh:
        fh.write("n2,method,power_mean,power_se,replicates\n")
        for pt in points:
            fh.write(f"{pt.n2},{pt.method},{FLOAT_FMT % pt.power_mean},"
                     f"{FLOAT_FMT % pt.power_se},{pt.replicates}\n")
    _write_manifest(outdir, args)
    for pt in points:
        print(f"n2={pt.n2:<4} {pt.method:<6} power={pt.power_mean:.3f} "
              f"(se {pt.power_se:.3f})")
    return 0


def cmd_permute(args) -> int:
    _positive("replicates", args.replicates)
    if args.replicates < 19:
        raise ConfigError("--replicates must be at least 19 for permutation p-values")
    if (args.input_a is None) != (args.input_b is None):
        raise ConfigError("provide both --input-a and --input-b, or neither")
    methods = _methods_from(args)
    if args.input_a:
        X1 = _load_standardized(args.input_a)
        X2 = _load_standardized(args.input_b)
        if X1.p != X2.p:
            raise DataFormatError(
                f"column counts differ: {X1.p} vs {X2.p}", path=args.input_b)
        ns = argparse.Namespace(**vars(args))
        ns.p, ns.n1, ns.n2 = max(X1.p, 4), X1.n, X2.n
        scenario = _scenario_from(ns)
    else:
        scenario = _scenario_from(args)
        truth = generate_ggm_pair(scenario.p, scenario.sparsity,
                                  scenario.diff_sparsity, derive_seed(args.seed, 0))
        X1, X2 = sample_dataset(truth, scenario.n1, scenario.n2,
                                derive_seed(args.seed, 1))
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    threads = _threads_from(args)
    for method in methods:
        stats = run_method(method, X1, X2, scenario, derive_seed(args.seed, 2, 1))
        perm = permutation_test(X1, X2, method, args.replicates, args.seed,
                                scenario=scenario, threads=threads)
        with open(outdir / f"permute_{method}.csv", "w") as fh:
            fh.write("node,other,parametric_p,permutation_p\n")
            p = stats.p
            for v in range(p):
                for col in range(p - 1):
                    fh.write(f"{v},{stats.entry_node(v, col)},"
                             f"{FLOAT_FMT % stats.pvals[v, col]},"
                             f"{FLOAT_FMT % perm[v, col]}\n")
        frac = float((perm <= 0.05).mean())
        print(f"{method}: fraction of permutation p <= 0.05: {frac:.4f}")
    _write_manifest(outdir, args)
    return 0


# ------------------------------------------------------------------ #
# entry point
# ------------------------------------------------------------------ #

_DISPATCH = {
    "simulate": cmd_simulate,
    "test": cmd_test,
    "benchmark": cmd_benchmark,
    "power-curve": cmd_power_curve,
    "permute": cmd_permute,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, set(vars(args).keys()))
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleTargets as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except GgmDiffError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
