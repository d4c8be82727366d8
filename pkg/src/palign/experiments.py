"""Experiment suites: canonical synthetic runs, robustness sweeps, and
alignment of externally produced embedding pairs.

Sweep results stream to ``sweep.csv`` one row per finished configuration
(appended and flushed immediately, so an interrupted sweep keeps everything
already computed); wall-clock timings go to a sibling ``timings.csv`` so the
result file stays byte-reproducible. Plots are rendered from the CSV alone
and are themselves deterministic.
"""

import io as _io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linprog

from . import matio
from .errors import DataError
from .metrics import MetricReport, make_report
from .rng import STREAM_SPLIT, rng_stream
from .solver import AlignmentProblem, AlignmentSolution, SvdMode, as_matrix, encode, solve_alignment
from .synthetic import SyntheticWorld, make_boundary_world, make_gmm_world


class SweepAxis(Enum):
    N = "n"
    D = "d"
    K = "k"


DEFAULT_AXIS_VALUES = {
    SweepAxis.N: (10, 50, 100, 500, 1000, 5000),
    SweepAxis.D: (2, 4, 8, 16, 32, 64),
    SweepAxis.K: (1, 2, 4, 8, 16),
}

SWEEP_CSV_COLUMNS = (
    "n", "d1", "d2", "k", "noise_sigma", "seed",
    "cmae", "ncmae", "mlre_avg", "residual_frobenius", "perfect", "error",
)


@dataclass(frozen=True)
class SweepFixed:
    """Values held constant on the axes that are not being swept."""

    n: int = 1000
    d1: int = 8
    d2: int = 8
    k: int = 2


@dataclass(frozen=True)
class SweepConfig:
    axis: SweepAxis
    axis_values: tuple = None
    fixed: SweepFixed = SweepFixed()
    noise_sigma: float = 0.0
    seeds: tuple = (0, 1, 2, 3, 4)
    output_path: str = None

    def __post_init__(self):
        values = self.axis_values
        if values is None:
            values = DEFAULT_AXIS_VALUES[self.axis]
        values = tuple(int(v) for v in values)
        if not values:
            raise ValueError("axis_values must be nonempty")
        if any(v < 1 for v in values):
            raise ValueError("axis values must be >= 1")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("axis_values must be strictly increasing")
        if self.axis is SweepAxis.K:
            d = self.fixed.d1 + self.fixed.d2
            bad = [v for v in values if v > d]
            if bad:
                raise ValueError(f"k values {bad} exceed d1+d2={d}")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        object.__setattr__(self, "axis_values", values)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


@dataclass(frozen=True)
class SweepRecord:
    n: int
    d1: int
    d2: int
    k: int
    noise_sigma: float
    seed: int
    cmae: float = None
    ncmae: float = None
    mlre_avg: float = None
    residual_frobenius: float = None
    perfect: bool = None
    wall_time_ms: float = None
    error: str = ""

    def csv_row(self) -> str:
        def fmt(v):
            return "" if v is None else matio.format_float(v)

        cells = [str(self.n), str(self.d1), str(self.d2), str(self.k),
                 matio.format_float(self.noise_sigma), str(self.seed),
                 fmt(self.cmae), fmt(self.ncmae), fmt(self.mlre_avg),
                 fmt(self.residual_frobenius)]
        cells.append("" if self.perfect is None else ("true" if self.perfect else "false"))
        cells.append(self.error.replace(",", ";").replace("\n", " "))
        return ",".join(cells)


@dataclass(frozen=True)
class SuiteResult:
    """Everything a canonical suite run produces."""

    world: SyntheticWorld
    solution: AlignmentSolution
    z1_hat: np.ndarray
    z2_hat: np.ndarray
    report: MetricReport
    separable: bool = None
    hyperplane: tuple = None


def _solve_world(world: SyntheticWorld, k: int,
                 rank_tolerance: float = 1e-10,
                 svd_mode: SvdMode = SvdMode.FULL):
    problem = AlignmentProblem(world.x_list[0], world.x_list[1], k,
                               rank_tolerance=rank_tolerance, svd_mode=svd_mode)
    solution = solve_alignment(problem)
    z1_hat = encode(solution.a1, world.x_list[0])
    z2_hat = encode(solution.a2, world.x_list[1])
    report = make_report(z1_hat, z2_hat, solution.residual_frobenius, world.z_true)
    return solution, z1_hat, z2_hat, report


def _write_suite_artifacts(out_dir: str, result: SuiteResult) -> None:
    os.makedirs(out_dir, exist_ok=True)
    matio.save_matrix_csv(os.path.join(out_dir, "Z1hat.csv"), result.z1_hat)
    matio.save_matrix_csv(os.path.join(out_dir, "Z2hat.csv"), result.z2_hat)
    matio.save_labels(os.path.join(out_dir, "labels.txt"), result.world.labels)
    matio.save_matrix_csv(os.path.join(out_dir, "A1.csv"), result.solution.a1)
    matio.save_matrix_csv(os.path.join(out_dir, "A2.csv"), result.solution.a2)
    matio.atomic_write_text(
        os.path.join(out_dir, "report.csv"),
        result.report.csv_header() + "\n" + result.report.csv_row() + "\n",
    )


def run_synthetic_suite(seed: int = 0, out_dir: str = None) -> SuiteResult:
    """Canonical Gaussian-mixture run: n=2000 noiseless samples, k=2,
    2-D modalities. Writes per-class latent scatter data and the metric
    report when ``out_dir`` is given."""
    world = make_gmm_world(n=2000, d=(2, 2), k=2, noise_sigma=0.0, seed=seed)
    solution, z1_hat, z2_hat, report = _solve_world(world, k=2)
    result = SuiteResult(world, solution, z1_hat, z2_hat, report)
    if out_dir is not None:
        _write_suite_artifacts(out_dir, result)
    return result


def run_boundary_suite(seed: int = 0, out_dir: str = None) -> SuiteResult:
    """Uniform linear-boundary run (n=2000, k=2) plus an explicit
    separating-hyperplane search over the estimated latents."""
    world = make_boundary_world(n=2000, d=(2, 2), margin=10.0, seed=seed)
    solution, z1_hat, z2_hat, report = _solve_world(world, k=2)
    separable, w, b = linear_separability(z1_hat, world.labels)
    result = SuiteResult(world, solution, z1_hat, z2_hat, report,
                         separable=separable,
                         hyperplane=(w, b) if separable else None)
    if out_dir is not None:
        _write_suite_artifacts(out_dir, result)
    return result


def linear_separability(points: np.ndarray, labels: np.ndarray):
    """Search for a hyperplane w.x + b with margin-1 separation of the two
    label classes (an LP feasibility problem). Returns (found, w, b)."""
    points = as_matrix(points, "points")
    labels = np.asarray(labels)
    if labels.shape[0] != points.shape[1]:
        raise ValueError("one label per point required")
    classes = np.unique(labels)
    if classes.size != 2:
        raise ValueError(f"need exactly 2 classes, got {classes.size}")
    y = np.where(labels == classes[0], 1.0, -1.0)
    k, n = points.shape
    # y_i (w.p_i + b) >= 1  <=>  -y_i p_i . w - y_i b <= -1
    a_ub = np.hstack([-(y[:, None] * points.T), -y[:, None]])
    res = linprog(c=np.zeros(k + 1), A_ub=a_ub, b_ub=-np.ones(n),
                  bounds=[(None, None)] * (k + 1), method="highs")
    if not res.success:
        return False, None, None
    return True, res.x[:k], float(res.x[k])


def _sweep_point(config: SweepConfig, value: int, seed: int) -> SweepRecord:
    fixed = config.fixed
    n, d1, d2, k = fixed.n, fixed.d1, fixed.d2, fixed.k
    if config.axis is SweepAxis.N:
        n = value
    elif config.axis is SweepAxis.D:
        d1 = d2 = value
    else:
        k = value
    start = time.perf_counter()
    try:
        world = make_gmm_world(n=n, d=(d1, d2), k=k,
                               noise_sigma=config.noise_sigma, seed=seed)
        solution, _, _, report = _solve_world(world, k)
        elapsed = (time.perf_counter() - start) * 1000.0
        return SweepRecord(n=n, d1=d1, d2=d2, k=k,
                           noise_sigma=config.noise_sigma, seed=seed,
                           cmae=report.cmae, ncmae=report.ncmae,
                           mlre_avg=report.mlre_avg,
                           residual_frobenius=report.residual_frobenius,
                           perfect=solution.perfect,
                           wall_time_ms=elapsed)
    except Exception as exc:
        elapsed = (time.perf_counter() - start) * 1000.0
        return SweepRecord(n=n, d1=d1, d2=d2, k=k,
                           noise_sigma=config.noise_sigma, seed=seed,
                           wall_time_ms=elapsed, error=f"{type(exc).__name__}: {exc}")


def run_sweep(config: SweepConfig, jobs: int = 1):
    """Run every (axis value, seed) configuration and return the records.

    With ``output_path`` set, rows stream into ``sweep.csv`` as they finish
    (ordered by axis value then seed), timings into ``timings.csv``, and one
    SVG per metric is rendered at the end.
    """
    tasks = [(value, seed) for value in config.axis_values for seed in config.seeds]
    records = []

    csv_file = None
    timing_file = None
    if config.output_path is not None:
        os.makedirs(config.output_path, exist_ok=True)
        csv_file = open(os.path.join(config.output_path, "sweep.csv"), "w",
                        encoding="utf-8")
        csv_file.write(",".join(SWEEP_CSV_COLUMNS) + "\n")
        csv_file.flush()
        timing_file = open(os.path.join(config.output_path, "timings.csv"), "w",
                           encoding="utf-8")
        timing_file.write("n,d1,d2,k,noise_sigma,seed,wall_time_ms\n")
        timing_file.flush()

    try:
        if jobs <= 1:
            results = (_sweep_point(config, v, s) for v, s in tasks)
            for record in results:
                records.append(record)
                _write_sweep_row(csv_file, timing_file, record)
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_sweep_point, config, v, s) for v, s in tasks]
                for future in futures:
                    record = future.result()
                    records.append(record)
                    _write_sweep_row(csv_file, timing_file, record)
    finally:
        if csv_file is not None:
            csv_file.close()
        if timing_file is not None:
            timing_file.close()

    if config.output_path is not None:
        plot_sweep(os.path.join(config.output_path, "sweep.csv"),
                   config.axis, config.output_path)
    return records


def _write_sweep_row(csv_file, timing_file, record: SweepRecord) -> None:
    if csv_file is None:
        return
    csv_file.write(record.csv_row() + "\n")
    csv_file.flush()
    timing_file.write(
        f"{record.n},{record.d1},{record.d2},{record.k},"
        f"{matio.format_float(record.noise_sigma)},{record.seed},"
        f"{matio.format_float(record.wall_time_ms)}\n"
    )
    timing_file.flush()


_LOG_METRICS = ("cmae", "ncmae", "residual_frobenius")
_PLOT_METRICS = ("cmae", "ncmae", "mlre_avg", "residual_frobenius")


def plot_sweep(csv_path: str, axis: SweepAxis, out_dir: str):
    """Render one SVG per metric from a sweep CSV: medians over seeds,
    one series per noise level, log y for the alignment errors.

    Re-rendering the same CSV produces byte-identical files.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = _read_sweep_csv(csv_path)
    axis_col = {"n": "n", "d": "d1", "k": "k"}[axis.value]
    outputs = {}
    for metric in _PLOT_METRICS:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        noise_levels = sorted({r["noise_sigma"] for r in rows})
        for sigma in noise_levels:
            xs = sorted({r[axis_col] for r in rows if r["noise_sigma"] == sigma})
            medians = []
            for xval in xs:
                vals = [r[metric] for r in rows
                        if r["noise_sigma"] == sigma and r[axis_col] == xval
                        and r[metric] is not None]
                medians.append(np.median(vals) if vals else np.nan)
            if metric in _LOG_METRICS:
                # display floor so exactly-zero errors stay plottable
                medians = [max(m, 1e-17) for m in medians]
            ax.plot(xs, medians, marker="o", label=f"noise={sigma:g}")
        ax.set_xlabel(axis.value)
        ax.set_ylabel(metric)
        if metric in _LOG_METRICS:
            ax.set_yscale("log")
        xs_all = sorted({r[axis_col] for r in rows})
        if xs_all and xs_all[0] > 0 and xs_all[-1] / xs_all[0] >= 8:
            ax.set_xscale("log")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = os.path.join(out_dir, f"sweep_{metric}.svg")
        with plt.rc_context({"svg.hashsalt": "palign"}):
            buf = _io.BytesIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
        matio.atomic_write_bytes(path, buf.getvalue())
        outputs[metric] = path
    return outputs


def _read_sweep_csv(csv_path: str):
    with open(csv_path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            if not line.strip():
                continue
            cells = line.rstrip("\n").split(",")
            row = dict(zip(header, cells))
            for col in ("n", "d1", "d2", "k", "seed"):
                row[col] = int(row[col])
            row["noise_sigma"] = float(row["noise_sigma"])
            for col in ("cmae", "ncmae", "mlre_avg", "residual_frobenius"):
                row[col] = float(row[col]) if row[col] else None
            rows.append(row)
    return rows


@dataclass(frozen=True)
class EmbeddingPairSet:
    """Paired feature matrices from some external producer (one sample per
    column), with an optional source manifest and labels."""

    z1_features: np.ndarray
    z2_features: np.ndarray
    labels: np.ndarray = None
    manifest: dict = None

    def __post_init__(self):
        z1 = as_matrix(self.z1_features, "z1_features")
        z2 = as_matrix(self.z2_features, "z2_features")
        if z1.shape[1] != z2.shape[1]:
            raise DataError(
                f"unpaired feature counts: {z1.shape[1]} vs {z2.shape[1]}")
        object.__setattr__(self, "z1_features", z1)
        object.__setattr__(self, "z2_features", z2)

    @property
    def n(self) -> int:
        return self.z1_features.shape[1]


def load_embedding_pairs(z1_path: str, z2_path: str,
                         manifest_path: str = None,
                         labels_path: str = None) -> EmbeddingPairSet:
    z1 = matio.load_matrix_csv(z1_path)
    z2 = matio.load_matrix_csv(z2_path)
    manifest = matio.load_manifest(manifest_path) if manifest_path else None
    labels = matio.load_labels(labels_path) if labels_path else None
    if manifest is not None:
        for key, actual in (("d1", z1.shape[0]), ("d2", z2.shape[0]),
                            ("n", z1.shape[1])):
            if key in manifest and int(manifest[key]) != actual:
                raise DataError(
                    f"manifest says {key}={manifest[key]}, files have {actual}")
    return EmbeddingPairSet(z1, z2, labels=labels, manifest=manifest)


@dataclass(frozen=True)
class EmbeddingAlignment:
    solution: AlignmentSolution
    report: MetricReport            # training split
    z1_hat: np.ndarray
    z2_hat: np.ndarray
    holdout_report: MetricReport = None
    train_idx: np.ndarray = None
    holdout_idx: np.ndarray = None


def align_embeddings(pairs: EmbeddingPairSet, k: int,
                     rank_tolerance: float = 1e-10,
                     svd_mode: SvdMode = SvdMode.FULL,
                     holdout_fraction: float = 0.0,
                     split_seed: int = 0,
                     out_dir: str = None) -> EmbeddingAlignment:
    """Solve alignment on externally produced features.

    ``holdout_fraction`` > 0 withholds a seeded random sample of pairs from
    the solve and reports their alignment error separately; the solver
    guarantees zero cross-modal gap only on the columns it saw.
    """
    if not 0.0 <= holdout_fraction < 1.0:
        raise ValueError("holdout_fraction must be in [0, 1)")
    n = pairs.n
    if holdout_fraction > 0.0:
        n_hold = int(round(holdout_fraction * n))
        n_hold = min(max(n_hold, 1), n - 1)
        perm = rng_stream(split_seed, STREAM_SPLIT).permutation(n)
        holdout_idx = np.sort(perm[:n_hold])
        train_idx = np.sort(perm[n_hold:])
    else:
        train_idx = np.arange(n)
        holdout_idx = None

    x1 = pairs.z1_features[:, train_idx]
    x2 = pairs.z2_features[:, train_idx]
    problem = AlignmentProblem(x1, x2, k, rank_tolerance=rank_tolerance,
                               svd_mode=svd_mode)
    solution = solve_alignment(problem)
    z1_hat = encode(solution.a1, x1)
    z2_hat = encode(solution.a2, x2)
    report = make_report(z1_hat, z2_hat, solution.residual_frobenius)

    holdout_report = None
    if holdout_idx is not None:
        h1 = pairs.z1_features[:, holdout_idx]
        h2 = pairs.z2_features[:, holdout_idx]
        zh1 = encode(solution.a1, h1)
        zh2 = encode(solution.a2, h2)
        residual = float(np.linalg.norm(zh1 - zh2))
        holdout_report = make_report(zh1, zh2, residual)

    result = EmbeddingAlignment(solution=solution, report=report,
                                z1_hat=z1_hat, z2_hat=z2_hat,
                                holdout_report=holdout_report,
                                train_idx=train_idx, holdout_idx=holdout_idx)
    if out_dir is not None:
        _write_embedding_artifacts(out_dir, result, k, rank_tolerance,
                                   holdout_fraction, split_seed)
    return result


def _write_embedding_artifacts(out_dir, result, k, rank_tolerance,
                               holdout_fraction, split_seed) -> None:
    os.makedirs(out_dir, exist_ok=True)
    matio.save_matrix_csv(os.path.join(out_dir, "A1.csv"), result.solution.a1)
    matio.save_matrix_csv(os.path.join(out_dir, "A2.csv"), result.solution.a2)
    matio.save_matrix_csv(os.path.join(out_dir, "Z1hat.csv"), result.z1_hat)
    matio.save_matrix_csv(os.path.join(out_dir, "Z2hat.csv"), result.z2_hat)
    matio.atomic_write_text(
        os.path.join(out_dir, "report.csv"),
        result.report.csv_header() + "\n" + result.report.csv_row() + "\n")
    if result.holdout_report is not None:
        matio.atomic_write_text(
            os.path.join(out_dir, "holdout_report.csv"),
            result.holdout_report.csv_header() + "\n"
            + result.holdout_report.csv_row() + "\n")
    matio.save_manifest(os.path.join(out_dir, "manifest.json"), {
        "producer": "palign-align-embeddings",
        "k": k,
        "rank_tolerance": rank_tolerance,
        "holdout_fraction": holdout_fraction,
        "split_seed": split_seed,
        "n_train": int(result.train_idx.shape[0]),
        "n_holdout": 0 if result.holdout_idx is None else int(result.holdout_idx.shape[0]),
        "d1": result.solution.a1.shape[1],
        "d2": result.solution.a2.shape[1],
    })
