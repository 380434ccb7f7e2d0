"""Command-line interface.

Exit codes: 0 accept (or success), 3 reject, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .gauss_space import read_gaussian_csv
from .metric_core import (
    DistanceMatrix,
    DistanceMatrixError,
    MetricEvaluationError,
    empirical_ball_process,
    euclidean_distances,
    medoid_index,
    read_matrix_csv,
    write_matrix_csv,
)
from .sim_harness import PowerStudyConfig, gaussian_distance_matrix, run_power_study, tree_distance_matrix
from .tree_space import NewickError, read_tree_list
from .two_sample import energy_permutation_test, ks_row_test, split_half_self_test

EXIT_ACCEPT, EXIT_USAGE, EXIT_DATA, EXIT_REJECT = 0, 1, 2, 3
SPACES = ("matrix", "euclidean", "bhv", "gaussian")
DEFAULT_SEED = 20240601


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    space: str = "matrix"
    alpha: float = 0.05
    B: int = 1000
    seed: int = DEFAULT_SEED
    out: str | None = None
    mode: str = "full"

    def __post_init__(self):
        if self.space not in SPACES:
            raise UsageError(f"unknown space {self.space!r}")

    def header(self) -> dict:
        return {"command": self.command, "space": self.space, "alpha": self.alpha,
                "B": self.B, "seed": self.seed, "mode": self.mode}

    def header_lines(self) -> list[str]:
        return [f"{k}={v}" for k, v in self.header().items()]


# --------------------------------------------------------------------------
# input helpers


def _open_text(path):
    try:
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(str(exc)) from exc


def read_vectors(fh) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise DataError(f"line {lineno}: {exc}") from exc
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise DataError("vector CSV must have rows of equal length")
    arr = np.array(rows)
    return arr[:, 0] if arr.shape[1] == 1 else arr


def load_points(path, space, args):
    with _open_text(path) as fh:
        try:
            if space == "bhv":
                return read_tree_list(fh, getattr(args, "leaves", None))
            if space == "gaussian":
                return read_gaussian_csv(fh, zero_mean=getattr(args, "zero_mean", False))
            if space == "euclidean":
                return read_vectors(fh)
        except (NewickError, ValueError) as exc:
            raise DataError(f"{path}: {exc}") from exc
    raise UsageError(f"space {space!r} does not take point files")


def distances_for(points, space) -> DistanceMatrix:
    try:
        if space == "bhv":
            return tree_distance_matrix(points)
        if space == "gaussian":
            return gaussian_distance_matrix(points)
        return euclidean_distances(points)
    except (MetricEvaluationError, DistanceMatrixError, ValueError) as exc:
        raise DataError(str(exc)) from exc


def load_matrix(path) -> DistanceMatrix:
    with _open_text(path) as fh:
        try:
            return read_matrix_csv(fh)
        except DistanceMatrixError as exc:
            raise DataError(f"{path}: {exc}") from exc


def _concat(x, y):
    if isinstance(x, np.ndarray):
        if x.ndim != np.asarray(y).ndim:
            raise DataError("X and Y vectors have different dimensions")
        return np.concatenate([x, y])
    return list(x) + list(y)


def read_labels(path, n_total) -> np.ndarray:
    with _open_text(path) as fh:
        toks = fh.read().replace(",", " ").split()
    try:
        labels = np.array([int(t) for t in toks if not t.startswith("#")])
    except ValueError as exc:
        raise DataError(f"{path}: labels must be 0/1 integers") from exc
    if labels.size != n_total or not np.isin(labels, (0, 1)).all():
        raise DataError(f"{path}: need {n_total} labels, each 0 (X) or 1 (Y)")
    return labels.astype(bool)


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands


def cmd_dist(args, cfg: RunConfig) -> int:
    if cfg.space == "matrix":
        raise UsageError("dist needs --space euclidean, bhv or gaussian")
    points = load_points(args.input, cfg.space, args)
    D = distances_for(points, cfg.space)
    if D.audit is None:
        # fast constructors skip the audit; the summary always reports one
        D = DistanceMatrix(D.d)
    buf = io.StringIO()
    write_matrix_csv(D, buf, [f"space={cfg.space}"])
    _emit(buf.getvalue(), cfg.out)
    audit = D.audit
    print(f"n={D.n} triangle_checked={audit.triples_checked} violations={audit.violations}", file=sys.stderr)
    return EXIT_ACCEPT


def _result_exit(res, cfg):
    payload = res.to_dict()
    payload["seed"] = cfg.seed
    payload["config"] = cfg.header()
    _emit(json.dumps(payload, indent=2) + "\n", cfg.out)
    return EXIT_REJECT if res.reject else EXIT_ACCEPT


def cmd_test(args, cfg: RunConfig) -> int:
    if args.pooled:
        if args.x or args.y:
            raise UsageError("give either --pooled or --x/--y, not both")
        if cfg.space == "matrix":
            D = load_matrix(args.pooled)
        else:
            D = distances_for(load_points(args.pooled, cfg.space, args), cfg.space)
        if args.labels:
            labels = read_labels(args.labels, D.n)
        else:
            if D.n % 2:
                raise DataError("odd pooled size; pass --labels")
            labels = np.r_[np.zeros(D.n // 2, bool), np.ones(D.n - D.n // 2, bool)]
    else:
        if not (args.x and args.y):
            raise UsageError("need --x and --y, or --pooled")
        if cfg.space == "matrix":
            if args.which == "energy":
                raise UsageError("the energy test needs cross distances: use --pooled")
            DX, DY = load_matrix(args.x), load_matrix(args.y)
            D = labels = None
        else:
            x = load_points(args.x, cfg.space, args)
            y = load_points(args.y, cfg.space, args)
            D = distances_for(_concat(x, y), cfg.space)
            labels = np.r_[np.zeros(len(x), bool), np.ones(len(y), bool)]
    if D is not None:
        if labels.sum() == 0 or labels.sum() == D.n:
            raise DataError("both groups need points")
        DX = D.submatrix(np.flatnonzero(~labels))
        DY = D.submatrix(np.flatnonzero(labels))
    try:
        if args.which == "ks":
            res = ks_row_test(DX, DY, cfg.alpha)
        else:
            res = energy_permutation_test(D, labels, cfg.B, cfg.alpha, cfg.seed)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return _result_exit(res, cfg)


def cmd_selftest(args, cfg: RunConfig) -> int:
    if cfg.space == "matrix":
        D = load_matrix(args.input)
    else:
        D = distances_for(load_points(args.input, cfg.space, args), cfg.space)
    try:
        res = split_half_self_test(D, cfg.alpha)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return _result_exit(res, cfg)


def load_power_config(path, overrides) -> PowerStudyConfig:
    data = {}
    if path:
        with _open_text(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise DataError(f"{path}: config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    mode = data.pop("mode", None)
    try:
        if mode is not None:
            return PowerStudyConfig.for_mode(mode, **data)
        return PowerStudyConfig(**data)
    except (TypeError, ValueError, KeyError) as exc:
        raise DataError(f"invalid power config: {exc}") from exc


def cmd_power(args, cfg: RunConfig) -> int:
    overrides = {"mode": args.mode, "seed": args.seed, "alpha": args.alpha, "workers": args.workers}
    if args.B is not None:
        overrides["B"] = args.B
    pcfg = load_power_config(args.config, overrides)
    if pcfg.space != "euclidean":
        raise DataError("the power command runs the real-line study; use the scripts for other spaces")
    table = run_power_study(pcfg)
    _emit(table.to_csv(), cfg.out)
    md = args.markdown or (str(Path(cfg.out).with_suffix(".md")) if cfg.out else None)
    if md:
        Path(md).write_text(table.to_markdown(), encoding="utf-8")
    elif not cfg.out:
        sys.stdout.write("\n" + table.to_markdown())
    return EXIT_ACCEPT


def parse_grid(spec: str, D: DistanceMatrix, center: int) -> np.ndarray:
    """``auto[:num]`` spans 0 to the largest row distance; ``lo:hi:num`` is a linspace;
    otherwise a comma-separated list of radii."""
    try:
        if spec.startswith("auto"):
            num = int(spec.split(":")[1]) if ":" in spec else 101
            return np.linspace(0.0, float(D.d[center].max()), num)
        if spec.count(":") == 2:
            lo, hi, num = spec.split(":")
            return np.linspace(float(lo), float(hi), int(num))
        return np.array([float(t) for t in spec.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad grid spec {spec!r}") from exc


def cmd_sprocess(args, cfg: RunConfig) -> int:
    D = load_matrix(args.input) if cfg.space == "matrix" else distances_for(
        load_points(args.input, cfg.space, args), cfg.space)
    if args.center == "medoid":
        center = medoid_index(D)
    else:
        try:
            center = int(args.center)
        except ValueError as exc:
            raise UsageError("--center must be 'medoid' or an integer index") from exc
        if not 0 <= center < D.n:
            raise DataError(f"center index {center} out of range for {D.n} points")
    grid = parse_grid(args.grid, D, center)
    try:
        path = empirical_ball_process(D, center, grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    buf = io.StringIO()
    for line in cfg.header_lines() + [f"center={center}"]:
        buf.write(f"# {line}\n")
    buf.write("t,value\n")
    for t, v in zip(path.grid, path.values):
        buf.write(f"{float(t)!r},{float(v)!r}\n")
    _emit(buf.getvalue(), cfg.out)
    return EXIT_ACCEPT


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="metrictest", description="Two-sample tests on metric spaces.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, space_default="matrix", spaces=SPACES):
        sp.add_argument("--space", choices=spaces, default=space_default)
        sp.add_argument("--alpha", type=float, default=0.05)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--out", default=None)
        sp.add_argument("--leaves", type=int, default=None, help="leaf count for Newick input")
        sp.add_argument("--zero-mean", action="store_true", help="require zero means in Gaussian input")

    d = sub.add_parser("dist", help="points file -> distance-matrix CSV")
    d.add_argument("input")
    common(d, space_default="euclidean", spaces=SPACES[1:])

    t = sub.add_parser("test", help="two-sample KS row test or energy test")
    t.add_argument("--which", choices=("ks", "energy"), default="ks")
    t.add_argument("--x")
    t.add_argument("--y")
    t.add_argument("--pooled")
    t.add_argument("--labels")
    t.add_argument("--B", type=int, default=1000)
    common(t)

    s = sub.add_parser("selftest", help="split-half self-test of one sample")
    s.add_argument("input")
    common(s)

    w = sub.add_parser("power", help="Monte-Carlo power table on the real line")
    w.add_argument("--config")
    w.add_argument("--mode", choices=("quick", "full"), default=None)
    w.add_argument("--B", type=int, default=None)
    w.add_argument("--seed", type=int, default=None)
    w.add_argument("--alpha", type=float, default=None)
    w.add_argument("--workers", type=int, default=None)
    w.add_argument("--out", default=None)
    w.add_argument("--markdown", default=None)

    r = sub.add_parser("sprocess", help="empirical ball-mass path around one point")
    r.add_argument("input")
    r.add_argument("--center", default="medoid")
    r.add_argument("--grid", default="auto")
    common(r)
    return p


COMMANDS = {"dist": cmd_dist, "test": cmd_test, "selftest": cmd_selftest,
            "power": cmd_power, "sprocess": cmd_sprocess}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors, --help and --version; callers always get an int
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = RunConfig(
            command=args.command,
            inputs=[v for v in (getattr(args, a, None) for a in ("input", "x", "y", "pooled", "config")) if v],
            space=getattr(args, "space", "matrix"),
            alpha=args.alpha if args.alpha is not None else 0.05,
            B=args.B if getattr(args, "B", None) is not None else 1000,
            seed=args.seed if args.seed is not None else DEFAULT_SEED,
            out=args.out,
            mode=getattr(args, "mode", None) or "full",
        )
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"metrictest: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"metrictest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
