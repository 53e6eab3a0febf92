"""Experiment orchestration: configured Monte Carlo runs, bound-verification
reports, spectral-edge exponent regression, and versioned persisted artifacts.

Every persisted file starts with a comment header carrying the format
version, the full configuration echo, the master seed, and a build tag.
All aggregation is either over exact integer counters or over arrays indexed
by realization, so identical configurations produce byte-identical artifacts
regardless of the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import IO

import numpy as np

from . import analytics
from .clusters import CensusAccumulator, CensusReport, decompose
from .ensemble import GraphSpec, sample_graph
from .spectral import (
    DEFAULT_SIZE_CAP,
    IdsEstimate,
    MomentSamples,
    cluster_min_gaps,
    empirical_ids,
    eigenvalues_cluster,
    graph_spectrum,
    moment_samples,
    path_emin_reference,
    quadratic_form,
)

__all__ = [
    "BUILD_TAG",
    "ExperimentConfig",
    "BoundsReport",
    "LifshitzFit",
    "Vertex0Census",
    "IdsRunResult",
    "CensusRunResult",
    "MomentsRunResult",
    "VerifyResult",
    "run_ids",
    "run_census",
    "run_lifshitz",
    "run_moments",
    "run_verify",
    "weighted_line_fit",
]

_CONFIG_FORMAT = "erlap-config-1"
BUILD_TAG = os.environ.get("ERLAP_BUILD_TAG", "erlap-0.1.0")

_GRID_KINDS = ("geometric", "linear", "explicit")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated parameters for one orchestrated run.

    Round-trips losslessly through the flat key=value file format written by
    :meth:`to_file`.
    """

    n_vertices: int = 1000
    edge_prob: float = 0.5
    n_reps: int = 10
    master_seed: int = 1
    grid_kind: str = "geometric"
    e_min: float = 0.05
    e_max: float = 0.5
    n_points: int = 10
    energies: tuple[float, ...] | None = None
    workers: int = 1
    outdir: str = "."
    size_cap: int = DEFAULT_SIZE_CAP
    chain_size: int = 3
    k_max: int = 2
    anchor_e_min: float = 1e-4
    anchor_e_max: float = 1e-2
    anchor_points: int = 20
    noise_floor: float = 5.0
    tau_n_max: int = 50

    def __post_init__(self):
        GraphSpec(self.n_vertices, self.edge_prob, self.master_seed)  # reuse validation
        if self.n_reps < 1:
            raise ValueError("n_reps must be at least 1")
        if self.grid_kind not in _GRID_KINDS:
            raise ValueError(f"grid_kind must be one of {_GRID_KINDS}, got {self.grid_kind!r}")
        if self.grid_kind == "explicit":
            if not self.energies:
                raise ValueError("explicit grid requires energies")
            object.__setattr__(self, "energies", tuple(float(x) for x in self.energies))
        else:
            if not (0.0 < self.e_min < self.e_max):
                raise ValueError("need 0 < e_min < e_max")
            if self.n_points < 2:
                raise ValueError("need at least two grid points")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.size_cap < 2:
            raise ValueError("size_cap must be at least 2")
        if self.chain_size < 2:
            raise ValueError("chain_size must be at least 2")
        if not 1 <= self.k_max <= 4:
            raise ValueError("k_max must lie in [1, 4]")
        if not (0.0 < self.anchor_e_min < self.anchor_e_max):
            raise ValueError("need 0 < anchor_e_min < anchor_e_max")
        if self.anchor_points < 4:
            raise ValueError("anchor fit needs at least 4 points")
        if self.noise_floor <= 0.0:
            raise ValueError("noise_floor must be positive")
        if self.tau_n_max < 1:
            raise ValueError("tau_n_max must be at least 1")

    def spec(self) -> GraphSpec:
        return GraphSpec(self.n_vertices, self.edge_prob, self.master_seed)

    def energy_grid(self) -> np.ndarray:
        if self.grid_kind == "explicit":
            return np.asarray(self.energies, dtype=np.float64)
        if self.grid_kind == "geometric":
            return np.geomspace(self.e_min, self.e_max, self.n_points)
        return np.linspace(self.e_min, self.e_max, self.n_points)

    def to_file(self, dest: str | Path | IO[str]) -> None:
        lines = [f"format={_CONFIG_FORMAT}\n"]
        for f in fields(self):
            lines.append(f"{f.name}={_encode(getattr(self, f.name))}\n")
        text = "".join(lines)
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            Path(dest).write_text(text, newline="\n")

    @classmethod
    def from_file(cls, src: str | Path | IO[str]) -> "ExperimentConfig":
        text = src.read() if hasattr(src, "read") else Path(src).read_text()
        pairs = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            pairs[key] = value
        if pairs.pop("format", None) != _CONFIG_FORMAT:
            raise ValueError(f"unsupported config format (expected {_CONFIG_FORMAT})")
        kwargs = {}
        for f in fields(cls):
            if f.name not in pairs:
                raise ValueError(f"config file is missing key {f.name!r}")
            kwargs[f.name] = _decode(f, pairs.pop(f.name))
        if pairs:
            raise ValueError(f"unknown config keys: {sorted(pairs)}")
        return cls(**kwargs)


def _encode(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _decode(f, raw: str):
    if raw == "none":
        return None
    t = f.type
    if t.startswith("int"):
        return int(raw)
    if t.startswith("float"):
        return float(raw)
    if t.startswith("tuple"):
        return tuple(float(x) for x in raw.split(","))
    return raw


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "nan" if math.isnan(v) else repr(v)
    return str(value)


def _header_lines(name: str, config: ExperimentConfig, extra: dict | None = None) -> list[str]:
    lines = [
        f"# format=erlap-{name}-1\n",
        f"# build={BUILD_TAG}\n",
        f"# seed={config.master_seed}\n",
    ]
    for f in fields(config):
        lines.append(f"# config.{f.name}={_encode(getattr(config, f.name))}\n")
    for key, value in (extra or {}).items():
        lines.append(f"# {key}={_fmt(value)}\n")
    return lines


def write_table(
    path: Path,
    name: str,
    config: ExperimentConfig,
    columns: list[tuple[str, object]],
    extra_header: dict | None = None,
) -> Path:
    """Write a CSV table with the standard comment header block."""
    rows = len(columns[0][1])
    lines = _header_lines(name, config, extra_header)
    lines.append(",".join(col for col, _ in columns) + "\n")
    for i in range(rows):
        lines.append(",".join(_fmt(values[i]) for _, values in columns) + "\n")
    path.write_text("".join(lines), newline="\n")
    return path


def write_summary(path: Path, name: str, config: ExperimentConfig, values: dict) -> Path:
    """Write a versioned key=value summary record."""
    lines = [
        f"format=erlap-{name}-summary-1\n",
        f"build={BUILD_TAG}\n",
        f"seed={config.master_seed}\n",
    ]
    for f in fields(config):
        lines.append(f"config.{f.name}={_encode(getattr(config, f.name))}\n")
    for key, value in values.items():
        lines.append(f"{key}={_fmt(value)}\n")
    path.write_text("".join(lines), newline="\n")
    return path


def summary_line(name: str, values: dict) -> str:
    """Single machine-readable stdout line for a subcommand."""
    parts = [name] + [f"{k}={_fmt(v)}" for k, v in values.items()]
    return " ".join(parts)


# ---------------------------------------------------------------------------
# ids + bounds


@dataclass(frozen=True)
class BoundsReport:
    """Per-energy comparison of the empirical spectral-edge gap against the
    analytic lower/upper envelopes and the rescaled-statistic window."""

    p: float
    n: int
    n_reps: int
    energies: np.ndarray
    delta_sigma: np.ndarray
    delta_sigma_se: np.ndarray
    lower_staircase: np.ndarray
    lower_smooth: np.ndarray
    upper: np.ndarray
    rescaled: np.ndarray
    usable: np.ndarray
    window_low: float
    window_high: float
    replica: float
    near_critical: bool


def build_bounds_report(
    ids: IdsEstimate, noise_floor: float
) -> BoundsReport:
    """Assemble the bound comparison for a subcritical IDS estimate.

    Grid points whose gap estimate does not clear ``noise_floor`` standard
    errors are marked unusable rather than zero-imputed; the log transform
    amplifies noise without mercy near zero.
    """
    p = ids.p
    if not 0.0 < p < 1.0:
        raise ValueError("bound curves require subcritical p in (0, 1)")
    e = ids.energies
    delta = ids.delta_sigma
    se = ids.delta_sigma_se
    finite_se = np.where(np.isfinite(se), se, np.inf)
    usable = (delta > 0.0) & (delta > noise_floor * finite_se)
    rescaled = np.full(e.shape, np.nan)
    if usable.any():
        rescaled[usable] = -np.log(delta[usable]) * np.sqrt(e[usable])
    return BoundsReport(
        p=p,
        n=ids.n,
        n_reps=ids.n_reps,
        energies=e,
        delta_sigma=delta,
        delta_sigma_se=se,
        lower_staircase=analytics.lower_bound_L(e, p, "staircase"),
        lower_smooth=analytics.lower_bound_L(e, p, "smooth"),
        upper=analytics.upper_bound_U(e, p),
        rescaled=rescaled,
        usable=usable,
        window_low=analytics.decay_f(p),
        window_high=analytics.TWO_SQRT3 * analytics.decay_F(p),
        replica=analytics.replica_g(p),
        near_critical=p > 0.95,
    )


@dataclass(frozen=True)
class IdsRunResult:
    ids: IdsEstimate
    bounds: BoundsReport | None
    ids_csv: Path
    bounds_csv: Path | None
    summary_path: Path


def run_ids(config: ExperimentConfig) -> IdsRunResult:
    """Monte Carlo IDS estimate plus bound verification, persisted as CSV."""
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = config.energy_grid()
    ids = empirical_ids(
        config.spec(), config.n_reps, grid, workers=config.workers, size_cap=config.size_cap
    )
    subcritical = 0.0 < config.edge_prob < 1.0
    bounds = build_bounds_report(ids, config.noise_floor) if subcritical else None
    ids_csv = write_table(
        outdir / "ids.csv",
        "ids-csv",
        config,
        [("E", ids.energies), ("sigma_hat", ids.sigma), ("stderr", ids.sigma_se)],
        {"sigma0_hat": ids.sigma0, "sigma0_stderr": ids.sigma0_se},
    )
    bounds_csv = None
    summary = {
        "status": "ok",
        "sigma0_hat": ids.sigma0,
        "sigma0_stderr": ids.sigma0_se,
        "grid_points": ids.energies.shape[0],
    }
    if bounds is not None:
        status = ["ok" if u else "below_noise_floor" for u in bounds.usable]
        bounds_csv = write_table(
            outdir / "bounds.csv",
            "bounds-csv",
            config,
            [
                ("E", bounds.energies),
                ("delta_sigma", bounds.delta_sigma),
                ("stderr", bounds.delta_sigma_se),
                ("lower_staircase", bounds.lower_staircase),
                ("lower_smooth", bounds.lower_smooth),
                ("upper", bounds.upper),
                ("rescaled_stat", bounds.rescaled),
                ("window_low", np.full(grid.shape, bounds.window_low)),
                ("window_high", np.full(grid.shape, bounds.window_high)),
                ("replica_g", np.full(grid.shape, bounds.replica)),
                ("status", status),
            ],
            {
                "replica_note": "replica value is heuristic, not a proven bound",
                "noise_floor": config.noise_floor,
                "near_critical": bounds.near_critical,
            },
        )
        summary["usable_points"] = int(bounds.usable.sum())
        summary["window_low"] = bounds.window_low
        summary["window_high"] = bounds.window_high
        if bounds.near_critical:
            summary["warning"] = "near-critical: slow convergence expected"
    else:
        summary["warning"] = "bounds omitted: p outside (0, 1)"
    summary_path = write_summary(outdir / "ids_summary.txt", "ids", config, summary)
    return IdsRunResult(ids, bounds, ids_csv, bounds_csv, summary_path)


# ---------------------------------------------------------------------------
# census


class Vertex0Census:
    """Integer counters for the cluster covering vertex 0, one per realization."""

    def __init__(self, cap: int = 64):
        self.size_counts = np.zeros(cap, dtype=np.int64)
        self.linear_counts = np.zeros(cap, dtype=np.int64)
        self.n_reps = 0

    def add(self, size: int, is_linear: bool) -> None:
        if size >= self.size_counts.shape[0]:
            new = 1 << int(size).bit_length()
            grown = np.zeros(new, dtype=np.int64)
            grown[: self.size_counts.shape[0]] = self.size_counts
            self.size_counts = grown
            grown = np.zeros(new, dtype=np.int64)
            grown[: self.linear_counts.shape[0]] = self.linear_counts
            self.linear_counts = grown
        self.size_counts[size] += 1
        if is_linear:
            self.linear_counts[size] += 1
        self.n_reps += 1

    def merge(self, other: "Vertex0Census") -> None:
        top = max(self.size_counts.shape[0], other.size_counts.shape[0])
        for name in ("size_counts", "linear_counts"):
            a = np.zeros(top, dtype=np.int64)
            mine = getattr(self, name)
            a[: mine.shape[0]] = mine
            theirs = getattr(other, name)
            a[: theirs.shape[0]] += theirs
            setattr(self, name, a)
        self.n_reps += other.n_reps

    def linear_chain_frequency(self, size: int) -> tuple[float, float]:
        """Frequency (and binomial standard error) of a linear chain of ``size``."""
        if self.n_reps < 1:
            raise ValueError("no realizations accumulated")
        count = int(self.linear_counts[size]) if size < self.linear_counts.shape[0] else 0
        q = count / self.n_reps
        se = math.sqrt(q * (1.0 - q) / self.n_reps) if self.n_reps >= 2 else math.nan
        return q, se


def _census_chunk(args):
    spec, rs = args
    acc = CensusAccumulator(spec.n_vertices, spec.edge_prob)
    v0 = Vertex0Census()
    for r in rs:
        d = decompose(sample_graph(spec, r))
        acc.add(d)
        _, _, linear, _ = d.class_flag_arrays()
        k0 = int(d.labels[0])
        v0.add(int(d.sizes[k0]), bool(linear[k0]))
    return [(rs[0], (acc, v0))]


@dataclass(frozen=True)
class CensusRunResult:
    report: CensusReport
    vertex0: Vertex0Census
    census_csv: Path
    summary_path: Path


def run_census(config: ExperimentConfig) -> CensusRunResult:
    """Cluster census over the configured ensemble with analytic comparison."""
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    spec = config.spec()
    indices = list(range(config.n_reps))
    if config.workers <= 1:
        chunks = [indices]
    else:
        step = max(1, math.ceil(config.n_reps / (config.workers * 4)))
        chunks = [indices[i : i + step] for i in range(0, config.n_reps, step)]
    args = [(spec, rs) for rs in chunks]
    if config.workers <= 1:
        partials = [_census_chunk(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            partials = list(pool.map(_census_chunk, args))
    flat = sorted((item for chunk in partials for item in chunk), key=lambda kv: kv[0])
    acc, v0 = flat[0][1]
    for _, (acc_part, v0_part) in flat[1:]:
        acc.merge(acc_part)
        v0.merge(v0_part)
    report = acc.report()

    n = config.n_vertices
    p = config.edge_prob
    subcritical = 0.0 < p < 1.0
    top = report.max_size
    sizes = np.arange(1, top + 1, dtype=np.int64)
    tau_hat = report.tau_hat()[1:]
    tau_se = report.tau_hat_se()[1:]
    if subcritical:
        tau_limit = analytics.tau_n(p, sizes)
        tree_finite = np.asarray([analytics.tree_prob_finite(n, p, int(s)) for s in sizes])
        linear_density = np.asarray(
            [analytics.linear_prob_finite(n, p, int(s)) / s if s >= 2 else math.nan for s in sizes]
        )
    else:
        tau_limit = np.full(sizes.shape, np.nan)
        tree_finite = np.full(sizes.shape, np.nan)
        linear_density = np.full(sizes.shape, np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = (tau_hat - tau_limit) / tau_se
    census_csv = write_table(
        outdir / "census.csv",
        "census-csv",
        config,
        [
            ("size", sizes),
            ("clusters", report.clusters_by_size[1:]),
            ("trees", report.trees_by_size[1:]),
            ("linear", report.linear_by_size[1:]),
            ("tau_hat", tau_hat),
            ("tau_hat_se", tau_se),
            ("tau_limit", tau_limit),
            ("z_tau", z),
            ("tree_density_finite", tree_finite),
            ("linear_density_finite", linear_density),
        ],
        {"se_note": "nan standard errors mean R < 2" if config.n_reps < 2 else "ok"},
    )
    chain = config.chain_size
    freq, freq_se = v0.linear_chain_frequency(chain)
    summary = {
        "status": "ok",
        "total_clusters": report.total_clusters,
        "mean_cluster_density": report.mean_cluster_density(),
        "tree_vertex_fraction": report.tree_fraction(),
        "chain_size": chain,
        "chain_frequency": freq,
        "chain_frequency_se": freq_se,
    }
    if subcritical:
        exact = analytics.linear_prob_finite(n, p, chain)
        summary["chain_exact"] = exact
        summary["chain_z"] = (freq - exact) / freq_se if freq_se and math.isfinite(freq_se) and freq_se > 0 else math.nan
    else:
        summary["note"] = "p >= 1: cluster-density limit unverified, reporting raw mean K/N only"
    summary_path = write_summary(outdir / "census_summary.txt", "census", config, summary)
    return CensusRunResult(report, v0, census_csv, summary_path)


# ---------------------------------------------------------------------------
# lifshitz fit


def weighted_line_fit(x, y, weights=None) -> tuple[float, float, float]:
    """Least-squares line fit returning (slope, intercept, slope_se).

    With ``weights`` = 1/Var(y) the slope error is the known-variance WLS
    expression; without, the residual variance drives an OLS error estimate.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise ValueError("need at least 3 matching points")
    known_var = weights is not None
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=np.float64)
    s = w.sum()
    sx = float((w * x).sum())
    sy = float((w * y).sum())
    sxx = float((w * x * x).sum())
    sxy = float((w * x * y).sum())
    denom = s * sxx - sx * sx
    slope = (s * sxy - sx * sy) / denom
    intercept = (sxx * sy - sx * sxy) / denom
    if known_var:
        slope_se = math.sqrt(s / denom)
    else:
        resid = y - slope * x - intercept
        dof = x.size - 2
        sigma2 = float((resid * resid).sum()) / dof
        slope_se = math.sqrt(sigma2 * s / denom)
    return slope, intercept, slope_se


@dataclass(frozen=True)
class LifshitzFit:
    """Weighted regression of ln|ln(sigma(E) - sigma(0))| against ln E.

    The limiting slope is -1/2; at accessible energies the empirical fit is
    reported against a wide soft gate while the analytic envelopes act as
    sanity anchors with the exact limiting slope.
    """

    slope: float
    slope_se: float
    intercept: float
    n_used: int
    used_energies: tuple[float, ...]
    excluded: tuple[tuple[float, str], ...]
    anchor_upper_slope: float
    anchor_upper_se: float
    anchor_smooth_slope: float
    anchor_smooth_se: float

    def __post_init__(self):
        if self.n_used < 4:
            raise ValueError("fit must use at least 4 points")


def _anchor_fit(p: float, e_lo: float, e_hi: float, points: int, curve: str):
    e = np.geomspace(e_lo, e_hi, points)
    vals = (
        analytics.upper_bound_U(e, p)
        if curve == "upper"
        else analytics.lower_bound_L(e, p, "smooth")
    )
    y = np.log(np.abs(np.log(vals)))
    slope, _, se = weighted_line_fit(np.log(e), y)
    return slope, se


def fit_lifshitz_exponent(
    ids: IdsEstimate, config: ExperimentConfig
) -> LifshitzFit:
    """Build the exponent fit from an IDS estimate (grid points need positive
    gap estimates clearing the configured noise floor)."""
    if not 0.0 < ids.p < 1.0:
        raise ValueError("exponent fit requires subcritical p in (0, 1)")
    delta = ids.delta_sigma
    se = ids.delta_sigma_se
    e = ids.energies
    used_x, used_y, used_w, used_e = [], [], [], []
    excluded = []
    for i in range(e.shape[0]):
        if not delta[i] > 0.0:
            excluded.append((float(e[i]), "nonpositive gap estimate"))
            continue
        if not math.isfinite(se[i]):
            excluded.append((float(e[i]), "no standard error (single realization)"))
            continue
        if delta[i] <= config.noise_floor * se[i]:
            excluded.append((float(e[i]), "below noise floor"))
            continue
        y = math.log(abs(math.log(delta[i])))
        var_y = (se[i] / (delta[i] * math.log(delta[i]))) ** 2
        used_x.append(math.log(e[i]))
        used_y.append(y)
        used_w.append(1.0 / var_y if var_y > 0 else 1.0)
        used_e.append(float(e[i]))
    if len(used_x) < 4:
        raise ValueError(
            f"only {len(used_x)} usable grid points (need >= 4); excluded: {excluded}"
        )
    slope, intercept, slope_se = weighted_line_fit(used_x, used_y, used_w)
    up = _anchor_fit(ids.p, config.anchor_e_min, config.anchor_e_max, config.anchor_points, "upper")
    lo = _anchor_fit(ids.p, config.anchor_e_min, config.anchor_e_max, config.anchor_points, "smooth")
    return LifshitzFit(
        slope=slope,
        slope_se=slope_se,
        intercept=intercept,
        n_used=len(used_x),
        used_energies=tuple(used_e),
        excluded=tuple(excluded),
        anchor_upper_slope=up[0],
        anchor_upper_se=up[1],
        anchor_smooth_slope=lo[0],
        anchor_smooth_se=lo[1],
    )


@dataclass(frozen=True)
class LifshitzRunResult:
    fit: LifshitzFit
    ids: IdsEstimate
    fit_csv: Path
    summary_path: Path


def run_lifshitz(config: ExperimentConfig, ids: IdsEstimate | None = None) -> LifshitzRunResult:
    """Exponent regression over a fresh or supplied IDS estimate, persisted."""
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if ids is None:
        ids = empirical_ids(
            config.spec(),
            config.n_reps,
            config.energy_grid(),
            workers=config.workers,
            size_cap=config.size_cap,
        )
    fit = fit_lifshitz_exponent(ids, config)
    reasons = dict(fit.excluded)
    status = [reasons.get(float(e), "used") for e in ids.energies]
    fit_csv = write_table(
        outdir / "lifshitz.csv",
        "lifshitz-csv",
        config,
        [
            ("E", ids.energies),
            ("delta_sigma", ids.delta_sigma),
            ("stderr", ids.delta_sigma_se),
            ("status", status),
        ],
        {"noise_floor": config.noise_floor},
    )
    summary_path = write_summary(
        outdir / "lifshitz_summary.txt",
        "lifshitz",
        config,
        {
            "status": "ok",
            "slope": fit.slope,
            "slope_se": fit.slope_se,
            "points_used": fit.n_used,
            "points_excluded": len(fit.excluded),
            "anchor_upper_slope": fit.anchor_upper_slope,
            "anchor_upper_se": fit.anchor_upper_se,
            "anchor_smooth_slope": fit.anchor_smooth_slope,
            "anchor_smooth_se": fit.anchor_smooth_se,
            "soft_gate_low": -0.75,
            "soft_gate_high": -0.25,
            "soft_gate_hit": -0.75 <= fit.slope <= -0.25,
        },
    )
    return LifshitzRunResult(fit, ids, fit_csv, summary_path)


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class MomentsRunResult:
    samples: MomentSamples
    reports: tuple[analytics.MomentInequalityReport, ...]
    moments_csv: Path
    summary_path: Path


def run_moments(config: ExperimentConfig) -> MomentsRunResult:
    """Even spectral moments versus the Poisson degree moments and the
    moment inequality, persisted as a table."""
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    samples = moment_samples(
        config.spec(),
        config.n_reps,
        config.k_max,
        workers=config.workers,
        size_cap=config.size_cap,
    )
    reports = tuple(
        analytics.moment_inequality_check(samples, config.edge_prob, k)
        for k in range(1, config.k_max + 1)
    )
    poisson = [analytics.poisson_moment(config.edge_prob, 2 * r.k) for r in reports]
    z_deg = [
        (r.deg_mean - poi) / r.deg_se if math.isfinite(r.deg_se) and r.deg_se > 0 else math.nan
        for r, poi in zip(reports, poisson)
    ]
    moments_csv = write_table(
        outdir / "moments.csv",
        "moments-csv",
        config,
        [
            ("two_k", [2 * r.k for r in reports]),
            ("lap_mean", [r.lap_mean for r in reports]),
            ("lap_se", [r.lap_se for r in reports]),
            ("deg_mean", [r.deg_mean for r in reports]),
            ("deg_se", [r.deg_se for r in reports]),
            ("poisson_moment", poisson),
            ("z_deg_vs_poisson", z_deg),
            ("adj_mean", [r.adj_mean for r in reports]),
            ("adj_se", [r.adj_se for r in reports]),
            ("rhs_mean", [r.rhs_mean for r in reports]),
            ("slack_mean", [r.slack_mean for r in reports]),
            ("slack_se", [r.slack_se for r in reports]),
            ("satisfied", [r.satisfied for r in reports]),
        ],
    )
    summary_path = write_summary(
        outdir / "moments_summary.txt",
        "moments",
        config,
        {
            "status": "ok" if all(r.satisfied for r in reports) else "inequality_violated",
            "k_max": config.k_max,
            "all_satisfied": all(r.satisfied for r in reports),
        },
    )
    return MomentsRunResult(samples, reports, moments_csv, summary_path)


# ---------------------------------------------------------------------------
# verify


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    checks: tuple[tuple[str, bool, str], ...]
    violations: tuple[str, ...]
    clusters_total: int
    clusters_checked: int


def _verify_ensemble(config: ExperimentConfig):
    """Sampled-ensemble property scan: spectral-gap floor, kernel identity,
    partition identities, quadratic-form consistency."""
    spec = config.spec()
    violations = []
    clusters_total = 0
    clusters_checked = 0
    for r in range(config.n_reps):
        g = sample_graph(spec, r)
        d = decompose(g)
        clusters_total += d.n_clusters
        if int(d.sizes.sum()) != g.n or int(d.edge_counts.sum()) != g.n_edges:
            violations.append(f"partition identity failed at realization {r}")
            continue
        ids, sizes, gaps = cluster_min_gaps(d, config.size_cap)
        clusters_checked += sizes.shape[0]
        bad = gaps < 1.0 / (sizes.astype(np.float64) ** 2)
        if bad.any():
            i = int(np.argmax(bad))
            cluster = d.cluster(int(ids[i]))
            violations.append(
                f"spectral-gap floor violated at realization {r}: size={int(sizes[i])} "
                f"e_min={float(gaps[i])!r} bound={1.0 / float(sizes[i]) ** 2!r} "
                f"edges={cluster.edges.tolist()}"
            )
        spectrum = graph_spectrum(g, d, config.size_cap)
        zeros = int(np.count_nonzero(spectrum.eigenvalues == 0.0))
        if zeros != d.n_clusters:
            violations.append(
                f"kernel identity failed at realization {r}: zeros={zeros} clusters={d.n_clusters}"
            )
        # per-realization counting function must be nondecreasing in E
        probe = np.geomspace(1e-3, 2.0 * max(float(spectrum.eigenvalues[-1]), 1.0), 24)
        counts = np.searchsorted(spectrum.eigenvalues, probe, side="right")
        if np.any(np.diff(counts) < 0):
            violations.append(f"counting function not monotone at realization {r}")
        # quadratic form and moment-vs-trace spot checks on a few clusters
        rng = np.random.default_rng([config.master_seed, r, 1])
        ids = np.nonzero(d.sizes >= 2)[0][:3]
        for k in ids:
            c = d.cluster(int(k))
            phi = rng.standard_normal(c.size)
            lap = np.zeros((c.size, c.size))
            i, j = c.edges[:, 0], c.edges[:, 1]
            np.add.at(lap, (i, i), 1.0)
            np.add.at(lap, (j, j), 1.0)
            lap[i, j] -= 1.0
            lap[j, i] -= 1.0
            direct = float(phi @ lap @ phi)
            via_edges = quadratic_form(c, phi)
            scale = max(1.0, abs(direct))
            if abs(direct - via_edges) > 1e-9 * scale:
                violations.append(
                    f"quadratic form mismatch at realization {r}: "
                    f"edge sum {via_edges!r} vs matrix {direct!r}"
                )
            if c.size <= 8:
                eigs = eigenvalues_cluster(c, config.size_cap).eigenvalues
                for power in (2, 4, 6):
                    via_eigs = float(np.sum(eigs**power))
                    via_trace = float(np.trace(np.linalg.matrix_power(lap, power)))
                    if abs(via_eigs - via_trace) > 1e-8 * max(1.0, abs(via_trace)):
                        violations.append(
                            f"moment/trace mismatch at realization {r}: power {power}, "
                            f"{via_eigs!r} vs {via_trace!r}"
                        )
    return violations, clusters_total, clusters_checked


def run_verify(config: ExperimentConfig) -> VerifyResult:
    """Full property gate; any violation flips the overall status."""
    checks = []
    violations: list[str] = []

    bad_paths = []
    for n in range(2, 201):
        c = _path_cluster(n)
        spectrum = eigenvalues_cluster(c, size_cap=max(config.size_cap, 200))
        ref = path_emin_reference(n)
        if abs(spectrum.e_min - ref) >= 1e-9 or spectrum.e_min > 12.0 / n**2:
            bad_paths.append(n)
    checks.append(("path_oracle", not bad_paths, f"n=2..200 bad={bad_paths}"))

    norm_bad = []
    for p in (0.1, 0.3, 0.5, 0.7, 0.9):
        total, _ = analytics.tau_normalization(p, 1e-8)
        if abs(total - 1.0) >= 1e-8:
            norm_bad.append((p, total))
    checks.append(("tau_normalization", not norm_bad, f"bad={norm_bad}"))

    ns = np.arange(1, 1001, dtype=np.int64)
    tail_bad = []
    for p in np.arange(0.05, 0.96, 0.05):
        p = round(float(p), 2)
        if np.any(analytics.tau_n(p, ns) > analytics.tau_tail_bound(p, ns)):
            tail_bad.append(p)
    checks.append(("tail_domination", not tail_bad, f"bad={tail_bad}"))

    sandwich_bad = []
    energies = np.geomspace(1e-4, 1.0, 40)
    for p in np.arange(0.05, 0.96, 0.05):
        p = round(float(p), 2)
        lo = analytics.lower_bound_L(energies, p, "staircase")
        lo_s = analytics.lower_bound_L(energies, p, "smooth")
        up = analytics.upper_bound_U(energies, p)
        mask = (lo < 1.0) & (up < 1.0)
        if np.any(lo[mask] > up[mask]) or np.any(lo_s[mask] > lo[mask]):
            sandwich_bad.append(p)
    checks.append(("bound_sandwich", not sandwich_bad, f"bad={sandwich_bad}"))

    ens_violations, clusters_total, clusters_checked = _verify_ensemble(config)
    violations.extend(ens_violations)
    checks.append(
        (
            "ensemble_scan",
            not ens_violations,
            f"clusters_total={clusters_total} gap_checked={clusters_checked}",
        )
    )

    for name, ok, detail in checks:
        if not ok and name != "ensemble_scan":
            violations.append(f"{name}: {detail}")
    ok = all(c[1] for c in checks)
    return VerifyResult(
        ok=ok,
        checks=tuple(checks),
        violations=tuple(violations),
        clusters_total=clusters_total,
        clusters_checked=clusters_checked,
    )


def _path_cluster(n: int):
    from .clusters import _make_cluster

    edges = np.stack([np.arange(n - 1, dtype=np.int64), np.arange(1, n, dtype=np.int64)], axis=1)
    return _make_cluster(np.arange(n, dtype=np.int64), edges)
