"""Experiment harness: datasets, method sweeps, timing, and CSV output.

A sweep runs every (method, m, trial) cell, building a rule and evaluating
its exact worst-case error against the configured target.  Randomized cells
get independent RNG streams derived from (master_seed, method, m, trial) by
a counter-based seed mix, so results are identical for any worker count.
Deterministic (greedy) methods run once per m and are replicated across
trial rows with trial = 0.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalError
from .greedy import greedy_select
from .kernels import KernelSpec, parse_kernel
from .quadrature import (
    QuadratureRule,
    TargetMeasure,
    optimal_weights,
    target_moments,
    target_self_product,
    worst_case_error,
)
from .sampling import parse_sampler, sample_nodes

METHODS = ("monte-carlo", "uniform", "uniform-wr", "arls", "f-greedy", "p-greedy", "fp-greedy")
_GREEDY_VARIANTS = {"f-greedy": "f", "p-greedy": "P", "fp-greedy": "f_over_P"}

# Stable stream ids for the counter-based seed mix.
_METHOD_IDS = {name: i for i, name in enumerate(METHODS)}
_DATA_STREAM = 101
_BANDWIDTH_STREAM = 102

RAW_HEADER = "method,m,trial,error,sample_time_s,weight_time_s,total_time_s"
SUMMARY_HEADER = "method,m,error_median,error_std,time_median"


@dataclass
class Dataset:
    """n points in d dimensions, optionally standardized per feature."""

    points: np.ndarray
    name: str = "data"
    standardized: bool = False


@dataclass
class ExperimentConfig:
    dataset: str = ""  # uniform_cube:d=..., gaussian_mixture:d=..,k=..,sep=.., csv:path=...
    kernel: str = "gaussian:sigma=median"
    methods: tuple = ("uniform",)
    m_grid: tuple = (16,)
    trials: int = 1
    master_seed: int = 0
    output: str = "results.csv"
    n: int | None = None  # synthetic dataset size
    data_seed: int | None = None  # None -> derived from master_seed
    standardize: bool = False
    target: str = "data"  # data | unit-cube
    timings: bool = True  # False zeroes the time columns for byte-stable CSVs
    median_subset: int = 1000
    workers: int = 1
    allow_large_n: bool = False  # lift the n <= 2^14 cap on quadratic error evaluation


@dataclass(frozen=True)
class ResultRow:
    method: str
    m: int
    trial: int
    error: float
    sample_time_s: float
    weight_time_s: float
    total_time_s: float


@dataclass
class ExperimentResult:
    rows: list = field(default_factory=list)


@dataclass(frozen=True)
class SummaryRow:
    method: str
    m: int
    error_median: float
    error_std: float
    time_median: float


def derive_rng(master_seed: int, *stream) -> np.random.Generator:
    """Independent generator for the given stream key; schedule-invariant."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(stream)))


def standardize_points(points: np.ndarray) -> np.ndarray:
    """Center each column and scale to unit (population) variance."""
    P = np.asarray(points, dtype=np.float64)
    std = P.std(axis=0)
    if np.any(std == 0.0):
        col = int(np.nonzero(std == 0.0)[0][0]) + 1
        raise InputError(f"column {col} has zero variance; cannot standardize")
    return (P - P.mean(axis=0)) / std


def load_csv(path, standardize: bool = False, delimiter: str = ",") -> Dataset:
    """Read a numeric CSV into a Dataset.

    A non-numeric first row is treated as a header and skipped.  Ragged rows
    and non-numeric cells raise with their location.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n").rstrip("\r") for line in fh]
    lines = [line for line in lines if line.strip()]
    if not lines:
        raise InputError(f"{path}: empty file")

    def parse_row(line, rownum):
        cells = [c.strip() for c in line.split(delimiter)]
        values = []
        for c, cell in enumerate(cells):
            try:
                values.append(float(cell))
            except ValueError:
                raise InputError(f"{path}: non-numeric cell at row {rownum}, column {c + 1}")
        return values

    start = 0
    try:
        first = parse_row(lines[0], 1)
    except InputError:
        start = 1
        if len(lines) == 1:
            raise InputError(f"{path}: header only, no data rows")
        first = parse_row(lines[1], 2)
    width = len(first)
    rows = [first]
    for i, line in enumerate(lines[start + 1 :], start=start + 2):
        row = parse_row(line, i)
        if len(row) != width:
            raise InputError(f"{path}: ragged row {i} has {len(row)} cells, expected {width}")
        rows.append(row)
    points = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(points)):
        raise InputError(f"{path}: non-finite values")
    if standardize:
        points = standardize_points(points)
    return Dataset(points=points, name=os.path.basename(str(path)), standardized=standardize)


def _mixture_centers(d: int, k: int, separation: float, rng: np.random.Generator) -> np.ndarray:
    """k well-separated centers: signed coordinate axes first, then random
    directions at growing radius for k > 2d."""
    centers = []
    for j in range(min(k, 2 * d)):
        e = np.zeros(d)
        e[j % d] = separation if j < d else -separation
        centers.append(e)
    for j in range(len(centers), k):
        v = rng.standard_normal(d)
        v *= separation * (1.0 + (j - 2 * d + 1) / (2.0 * d)) / np.linalg.norm(v)
        centers.append(v)
    return np.asarray(centers)


def gen_synthetic(spec: str, n: int, seed: int) -> Dataset:
    """Deterministic synthetic dataset.

    ``uniform_cube:d=<int>`` draws n points uniformly from [0, 1)^d;
    ``gaussian_mixture:d=<int>,k=<int>,sep=<float>`` draws from k unit-variance
    components with centers ``sep`` apart.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    head, _, tail = spec.strip().partition(":")
    kind = head.strip().lower()
    params = {}
    if tail:
        for item in tail.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise InputError(f"malformed dataset parameter {item!r}")
            params[key.strip().lower()] = value.strip()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if kind == "uniform_cube":
        d = int(params.pop("d", "1"))
        if params:
            raise InputError(f"unknown dataset parameters {sorted(params)}")
        return Dataset(points=rng.random((n, d)), name=f"uniform_cube(d={d})")
    if kind == "gaussian_mixture":
        d = int(params.pop("d", "2"))
        k = int(params.pop("k", "3"))
        sep = float(params.pop("sep", "5"))
        if params:
            raise InputError(f"unknown dataset parameters {sorted(params)}")
        centers = _mixture_centers(d, k, sep, rng)
        labels = rng.integers(0, k, size=n)
        pts = centers[labels] + rng.standard_normal((n, d))
        return Dataset(points=pts, name=f"gaussian_mixture(d={d},k={k},sep={sep})")
    raise InputError(f"unknown dataset kind {kind!r}")


def _resolve_dataset(config: ExperimentConfig) -> Dataset:
    head = config.dataset.strip().partition(":")[0].strip().lower()
    if head == "csv":
        params = {}
        for item in config.dataset.partition(":")[2].split(","):
            key, _, value = item.partition("=")
            params[key.strip().lower()] = value.strip()
        path = params.get("path")
        if not path:
            raise InputError("csv dataset needs path=<file>")
        return load_csv(path, standardize=config.standardize)
    if config.n is None:
        raise InputError("synthetic datasets need n")
    seed = config.data_seed
    if seed is None:
        seed = int(derive_rng(config.master_seed, _DATA_STREAM).integers(2**63))
    ds = gen_synthetic(config.dataset, config.n, seed)
    if config.standardize:
        ds.points = standardize_points(ds.points)
        ds.standardized = True
    return ds


def _method_base(method: str) -> str:
    return method.partition(":")[0].strip().lower()


def _validate(config: ExperimentConfig, n: int):
    grid = tuple(int(m) for m in config.m_grid)
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError("m_grid must be strictly increasing")
    if grid[-1] > n:
        raise InputError(f"largest m {grid[-1]} exceeds dataset size {n}")
    if config.trials < 1:
        raise InputError("trials must be >= 1")
    if not config.methods:
        raise InputError("need at least one method")
    for method in config.methods:
        if _method_base(method) not in METHODS:
            raise InputError(f"unknown method {method!r}; expected one of {METHODS}")
    if config.target not in ("data", "unit-cube"):
        raise InputError("target must be 'data' or 'unit-cube'")
    if config.target == "data" and n > 2**14 and not config.allow_large_n:
        raise InputError(
            f"n = {n} exceeds 2^14 and the discrete-target error evaluation is "
            "quadratic in n; set allow_large_n = true to proceed"
        )


def build_rule(
    points: np.ndarray,
    kernel: KernelSpec,
    method: str,
    m: int,
    rng: np.random.Generator,
    target: TargetMeasure,
    f_means: np.ndarray | None = None,
) -> QuadratureRule:
    """One rule for the given method; phase wall times recorded on the rule."""
    base = _method_base(method)
    n = points.shape[0]
    t0 = time.perf_counter()
    if base == "monte-carlo":
        indices = rng.integers(0, n, size=m)
        t1 = time.perf_counter()
        rule = QuadratureRule(nodes=points[indices], weights=np.full(m, 1.0 / m), indices=indices)
    elif base in _GREEDY_VARIANTS:
        variant = _GREEDY_VARIANTS[base]
        state = greedy_select(points, kernel, f_means, m, variant)
        indices = state.selected
        t1 = time.perf_counter()
        rule = optimal_weights(kernel, points[indices], target)
        rule.indices = indices
    else:
        cfg = parse_sampler(method if base == "arls" else base, m=m)
        indices = sample_nodes(points, kernel, cfg, rng)
        t1 = time.perf_counter()
        rule = optimal_weights(kernel, points[indices], target)
        rule.indices = indices
    t2 = time.perf_counter()
    rule.sample_time_s = t1 - t0
    rule.weight_time_s = t2 - t1
    return rule


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None) -> ExperimentResult:
    """Execute the full method x m x trial sweep described by the config."""
    ds = dataset if dataset is not None else _resolve_dataset(config)
    points = np.asarray(ds.points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    _validate(config, n)

    kernel = parse_kernel(
        config.kernel,
        points=points,
        rng=derive_rng(config.master_seed, _BANDWIDTH_STREAM),
        median_subset=config.median_subset,
    )
    if config.target == "unit-cube":
        target = TargetMeasure.unit_cube(points.shape[1])
    else:
        target = TargetMeasure.discrete(points)
    self_product = target_self_product(kernel, target)

    needs_means = any(_method_base(meth) in ("f-greedy", "fp-greedy") for meth in config.methods)
    f_means = (
        target_moments(kernel, points, TargetMeasure.discrete(points)) if needs_means else None
    )

    def run_cell(method: str, m: int, trial: int | None) -> list[ResultRow]:
        base = _method_base(method)
        if trial is None:
            rng = derive_rng(config.master_seed, _METHOD_IDS[base], m)
        else:
            rng = derive_rng(config.master_seed, _METHOD_IDS[base], m, trial)
        try:
            rule = build_rule(points, kernel, method, m, rng, target, f_means)
            error = worst_case_error(rule, target, kernel, self_product=self_product)
        except (InputError, NumericalError) as exc:
            raise type(exc)(f"method={method} m={m} trial={trial}: {exc}") from exc
        ts, tw = rule.sample_time_s, rule.weight_time_s
        if trial is None:  # deterministic method: replicate across trial rows
            return [
                ResultRow(method, m, 0, error, ts, tw, ts + tw) for _ in range(config.trials)
            ]
        return [ResultRow(method, m, trial, error, ts, tw, ts + tw)]

    tasks = []
    for method in config.methods:
        deterministic = _method_base(method) in _GREEDY_VARIANTS
        for m in config.m_grid:
            if deterministic:
                tasks.append((method, int(m), None))
            else:
                tasks.extend((method, int(m), t) for t in range(config.trials))

    workers = max(1, int(config.workers))
    env_cap = os.environ.get("KQUAD_THREADS")
    if env_cap:
        workers = min(workers, max(1, int(env_cap)))
    if workers == 1:
        chunks = [run_cell(*task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda t: run_cell(*t), tasks))
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.method, r.m, r.trial))
    return ExperimentResult(rows=rows)


def summarize(result: ExperimentResult) -> list[SummaryRow]:
    """Per-(method, m) medians and sample standard deviations.

    Medians use the midpoint of the two central values for even counts; a
    single trial reports standard deviation 0 by convention.
    """
    if not result.rows:
        raise InputError("empty experiment result")
    groups: dict[tuple[str, int], list[ResultRow]] = {}
    for row in result.rows:
        groups.setdefault((row.method, row.m), []).append(row)
    out = []
    for (method, m), rows in sorted(groups.items()):
        errors = np.array([r.error for r in rows])
        times = np.array([r.total_time_s for r in rows])
        std = float(errors.std(ddof=1)) if errors.size > 1 else 0.0
        out.append(
            SummaryRow(
                method=method,
                m=m,
                error_median=float(np.median(errors)),
                error_std=std,
                time_median=float(np.median(times)),
            )
        )
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def write_raw_csv(result: ExperimentResult, path, timings: bool = True) -> None:
    """Raw rows, one per (method, m, trial).  With timings off the time
    columns are written as zeros so reruns are byte-identical."""
    lines = [RAW_HEADER]
    for r in result.rows:
        ts, tw, tt = (r.sample_time_s, r.weight_time_s, r.total_time_s) if timings else (0, 0, 0)
        lines.append(f"{r.method},{r.m},{r.trial},{_fmt(r.error)},{_fmt(ts)},{_fmt(tw)},{_fmt(tt)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_csv(summary: list, path, timings: bool = True) -> None:
    lines = [SUMMARY_HEADER]
    for s in summary:
        tm = s.time_median if timings else 0.0
        lines.append(f"{s.method},{s.m},{_fmt(s.error_median)},{_fmt(s.error_std)},{_fmt(tm)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_summary_csv(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != SUMMARY_HEADER:
        raise InputError(f"{path}: not a summary CSV")
    out = []
    for line in lines[1:]:
        method, m, med, std, tmed = line.split(",")
        out.append(
            SummaryRow(
                method=method,
                m=int(m),
                error_median=float(med),
                error_std=float(std),
                time_median=float(tmed),
            )
        )
    return out


_BOOL = {"true": True, "on": True, "yes": True, "false": False, "off": False, "no": False}

_CONFIG_KEYS = {
    "dataset": str,
    "kernel": str,
    "methods": "list",
    "m_grid": "intlist",
    "trials": int,
    "master_seed": int,
    "output": str,
    "n": int,
    "data_seed": int,
    "standardize": "bool",
    "target": str,
    "timings": "bool",
    "median_subset": int,
    "workers": int,
    "allow_large_n": "bool",
}


def parse_config(path) -> ExperimentConfig:
    """Flat ``key = value`` config file, ``#`` comments, one experiment per file."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, value = key.strip().lower(), value.strip()
            if key not in _CONFIG_KEYS:
                raise InputError(f"{path}:{lineno}: unknown key {key!r}")
            kind = _CONFIG_KEYS[key]
            try:
                if kind == "list":
                    values[key] = tuple(v.strip() for v in value.split(",") if v.strip())
                elif kind == "intlist":
                    values[key] = tuple(int(v) for v in value.split(",") if v.strip())
                elif kind == "bool":
                    values[key] = _BOOL[value.lower()]
                else:
                    values[key] = kind(value)
            except (ValueError, KeyError) as exc:
                raise InputError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    missing = {"dataset", "kernel", "methods", "m_grid", "trials", "master_seed", "output"} - set(
        values
    )
    if missing:
        raise InputError(f"{path}: missing required keys {sorted(missing)}")
    return ExperimentConfig(**values)


def summary_path_for(raw_path: str) -> str:
    stem, ext = os.path.splitext(raw_path)
    return f"{stem}_summary{ext or '.csv'}"


def run_to_files(config: ExperimentConfig) -> tuple[str, str]:
    """Run the experiment and write the raw and summary CSVs."""
    result = run_experiment(config)
    write_raw_csv(result, config.output, timings=config.timings)
    spath = summary_path_for(config.output)
    write_summary_csv(summarize(result), spath, timings=config.timings)
    return config.output, spath
