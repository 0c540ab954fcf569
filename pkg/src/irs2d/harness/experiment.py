"""Monte Carlo driver: scene sampling, estimation, aggregation and CSV output.

Every (trial, IRS size) pair spawns a scene stream and a unit-variance noise
stream from ``SeedSequence([seed, n_irs, trial])``.  The same
draws are reused for every SNR point and every method, so comparisons are
paired and curves are smooth in SNR.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..channel import PARAMETERS, ArrayConfig, build_channel_factors, sample_scene
from ..crlb import SingularFisherError, crlb_all
from ..estimators import (
    PeakGrid,
    hkmr_estimate,
    krf_baseline,
    ls_baseline,
    reconstruct_cascaded,
    tshdr_estimate,
)
from ..training import NoiseModel, PilotObservation, build_design, noiseless_blocks
from .complexity import complexity_flops, near_square_factors
from .metrics import (
    ideal_spectral_efficiency,
    nmse,
    rmse_wrapped,
    spectral_efficiency,
)

log = logging.getLogger(__name__)

CSV_COLUMNS = ("metric", "method", "snr_db", "n_irs", "parameter", "value", "trials", "seed")
METHODS = ("HKMR", "TSHDR", "LS", "KRF")
PARAMETRIC = ("HKMR", "TSHDR")
METRICS = ("rmse", "nmse", "se", "complexity")
COMPLEXITY_METHODS = METHODS + ("HDR",)
SWEEP_IRS_SIZES = (16, 64, 256, 500, 1000, 1500, 2000, 2500, 3000)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    arrays: ArrayConfig = field(default_factory=ArrayConfig)
    snr_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = 500
    methods: tuple = METHODS
    metrics: tuple = ("rmse",)
    irs_sizes: tuple = ()
    nmse_irs_snr_db: float = 5.0
    se_irs_snr_db: float = -17.0
    seed: int = 0
    out_dir: str = "results"
    plot_script: bool = False
    grid_size: int = 4096
    unit_modulus: bool = False
    bpsk_pilots: bool = False
    P_T: float = 1.0

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if len(self.snr_db) == 0:
            raise ConfigError("SNR grid is empty")
        bad = [m for m in self.methods if m not in COMPLEXITY_METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {COMPLEXITY_METHODS}")
        if "HDR" in self.methods and set(self.metrics) - {"complexity"}:
            raise ConfigError("HDR is only available for the complexity metric")
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise ConfigError(f"unknown metrics {bad}; choose from {METRICS}")
        if any(n < 1 for n in self.irs_sizes):
            raise ConfigError("IRS sizes must be positive")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if self.grid_size < 2:
            raise ConfigError("grid_size must be >= 2")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "arrays" in data:
            arrays = data["arrays"]
            if not isinstance(arrays, ArrayConfig):
                try:
                    arrays = ArrayConfig(**arrays)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"invalid arrays section: {exc}") from exc
            data["arrays"] = arrays
        for key in ("snr_db", "irs_sizes"):
            if key in data:
                data[key] = tuple(float(v) if key == "snr_db" else int(v) for v in data[key])
        for key in ("methods", "metrics"):
            if key in data:
                vals = data[key]
                vals = [vals] if isinstance(vals, str) else vals
                data[key] = tuple(v.upper() if key == "methods" else v.lower() for v in vals)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_db"] = list(self.snr_db)
        d["irs_sizes"] = list(self.irs_sizes)
        d["methods"] = list(self.methods)
        d["metrics"] = list(self.metrics)
        return d


@dataclass(frozen=True)
class MetricRecord:
    metric: str
    method: str
    snr_db: float
    n_irs: int
    parameter: str
    value: float
    trials: int
    seed: int
    wall_time: float = field(default=0.0, compare=False)

    def row(self):
        return (
            self.metric,
            self.method,
            "" if self.snr_db is None else _fmt(self.snr_db),
            str(self.n_irs),
            self.parameter,
            _fmt(self.value),
            str(self.trials),
            str(self.seed),
        )


def _fmt(x) -> str:
    return format(float(x), ".9g")


def _draws(seed, n_irs, trial):
    ss = np.random.SeedSequence([seed, n_irs, trial])
    scene_ss, noise_ss = ss.spawn(2)
    return np.random.default_rng(scene_ss), np.random.default_rng(noise_ss)


def _noise_var(snr_db, P_T):
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return NoiseModel.from_snr_db(snr_db, P_T).variance


@dataclass
class TrialTable:
    """Per-trial raw results of one sweep point; NaN marks failed trials."""

    errors: dict = field(default_factory=dict)    # method -> (trials, 6)
    crlb_var: np.ndarray = None                    # (trials, 6)
    nmse: dict = field(default_factory=dict)       # method -> (trials,)
    se: dict = field(default_factory=dict)         # method -> (trials,)
    failures: dict = field(default_factory=dict)   # method -> count
    wall_time: float = 0.0


def run_point(arrays: ArrayConfig, snr_db, trials, seed, methods=METHODS, want=("rmse",),
              grid: PeakGrid = None, unit_modulus=False, bpsk_pilots=False, P_T=1.0):
    """Simulate ``trials`` paired realizations at one SNR and return a :class:`TrialTable`."""
    grid = grid or PeakGrid()
    design = build_design(arrays, unit_modulus=unit_modulus, bpsk_pilots=bpsk_pilots)
    noise_var = _noise_var(snr_db, P_T)
    want = set(want)
    table = TrialTable()
    methods = [m for m in methods if m in METHODS]
    for m in methods:
        if m in PARAMETRIC:
            table.errors[m] = np.full((trials, len(PARAMETERS)), np.nan)
        table.nmse[m] = np.full(trials, np.nan)
        table.se[m] = np.full(trials, np.nan)
        table.failures[m] = 0
    table.se["IDEAL"] = np.full(trials, np.nan)
    table.crlb_var = np.full((trials, len(PARAMETERS)), np.nan)

    t0 = time.perf_counter()
    for t in range(trials):
        scene_rng, noise_rng = _draws(seed, arrays.N, t)
        scene = sample_scene(scene_rng)
        ch = build_channel_factors(arrays, scene)
        X = noiseless_blocks(ch, design, P_T)
        if noise_var > 0:
            X = X + math.sqrt(noise_var / 2.0) * (
                noise_rng.standard_normal(X.shape) + 1j * noise_rng.standard_normal(X.shape)
            )
        obs = PilotObservation(X, noise_var, P_T, seed=(seed, arrays.N, t))
        E_true = math.sqrt(P_T) * ch.cascaded()
        truth = scene.truth

        if "rmse" in want and noise_var > 0:
            try:
                bounds = crlb_all(scene, arrays, noise_var)
                table.crlb_var[t] = [bounds[p] ** 2 for p in PARAMETERS]
            except SingularFisherError:
                pass
        if "se" in want and noise_var > 0:
            table.se["IDEAL"][t] = ideal_spectral_efficiency(arrays, noise_var, P_T)

        for m in methods:
            try:
                if m in PARAMETRIC:
                    fn = hkmr_estimate if m == "HKMR" else tshdr_estimate
                    est = fn(obs, design, grid)
                    errs = est.errors(truth)
                    table.errors[m][t] = [errs[p] for p in PARAMETERS]
                    if "nmse" in want:
                        table.nmse[m][t] = nmse(E_true, reconstruct_cascaded(est, arrays), gauge=True)
                    if "se" in want and noise_var > 0:
                        table.se[m][t] = spectral_efficiency(ch, est, noise_var, P_T, cfg=arrays)
                elif m == "LS":
                    if "nmse" in want:
                        table.nmse[m][t] = nmse(E_true, ls_baseline(obs, design))
                elif m == "KRF":
                    if not want & {"nmse", "se"}:
                        continue
                    res = krf_baseline(obs, design)
                    if "nmse" in want:
                        table.nmse[m][t] = nmse(E_true, res.E)
                    if "se" in want and noise_var > 0:
                        table.se[m][t] = spectral_efficiency(ch, res, noise_var, P_T)
            except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                table.failures[m] += 1
                log.warning("trial %d, %s at %s dB failed: %s", t, m, snr_db, exc)
    table.wall_time = time.perf_counter() - t0
    return table


def _mean(x):
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    return math.fsum(x) / x.size if x.size else float("nan")


def _median(x):
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x)]
    return float(np.median(x)) if x.size else float("nan")


def _finite_count(x):
    return int(np.sum(np.isfinite(np.asarray(x, dtype=float))))


def records_for_point(table: TrialTable, metric, snr_db, n_irs, seed, methods):
    recs = []

    def add(name, method, param, value, trials):
        recs.append(MetricRecord(name, method, snr_db, n_irs, param, value, trials, seed,
                                 table.wall_time))

    if metric == "rmse":
        for m in methods:
            if m not in table.errors:
                continue
            errs = table.errors[m]
            for j, p in enumerate(PARAMETERS):
                col = errs[:, j]
                ok = col[np.isfinite(col)]
                if ok.size:
                    add("rmse", m, p, rmse_wrapped(0.0, ok), ok.size)
                    add("median_abs_error", m, p, float(np.median(np.abs(ok))), ok.size)
        if np.any(np.isfinite(table.crlb_var)):
            for j, p in enumerate(PARAMETERS):
                add("rmse", "CRLB", p, math.sqrt(_mean(table.crlb_var[:, j])),
                    _finite_count(table.crlb_var[:, j]))
    elif metric == "nmse":
        for m in methods:
            if m in table.nmse and _finite_count(table.nmse[m]):
                add("nmse", m, "E", _mean(table.nmse[m]), _finite_count(table.nmse[m]))
                add("nmse_median", m, "E", _median(table.nmse[m]), _finite_count(table.nmse[m]))
    elif metric == "se":
        for m in list(methods) + ["IDEAL"]:
            if m in ("LS",) or m not in table.se or not _finite_count(table.se[m]):
                continue
            add("se", m, "se", _mean(table.se[m]), _finite_count(table.se[m]))
    for m, n_fail in table.failures.items():
        if n_fail:
            add("failures", m, metric, n_fail, n_fail)
    return recs


def complexity_records(cfg: ExperimentConfig):
    sizes = cfg.irs_sizes or SWEEP_IRS_SIZES
    methods = [m for m in cfg.methods if m in COMPLEXITY_METHODS]
    if "HDR" not in methods:
        methods.append("HDR")
    recs = []
    for n in sizes:
        arrays = cfg.arrays.with_irs(*near_square_factors(n))
        for m in methods:
            recs.append(MetricRecord("complexity", m, None, n, "flops",
                                     complexity_flops(m, arrays), 1, cfg.seed))
    return recs


def run_metric(cfg: ExperimentConfig, metric: str):
    """All records for one metric (SNR sweep, plus IRS-size sweep for nmse/se)."""
    if metric == "complexity":
        return complexity_records(cfg)
    grid = PeakGrid(size=cfg.grid_size)
    want = (metric,)
    kw = dict(grid=grid, unit_modulus=cfg.unit_modulus, bpsk_pilots=cfg.bpsk_pilots, P_T=cfg.P_T)
    methods = [m for m in cfg.methods if m in METHODS]
    recs = []
    for snr in cfg.snr_db:
        table = run_point(cfg.arrays, snr, cfg.trials, cfg.seed, methods, want, **kw)
        recs += records_for_point(table, metric, snr, cfg.arrays.N, cfg.seed, methods)
        log.info("%s: %g dB done in %.1f s", metric, snr, table.wall_time)
    if metric in ("nmse", "se") and cfg.irs_sizes:
        snr = cfg.nmse_irs_snr_db if metric == "nmse" else cfg.se_irs_snr_db
        for n in cfg.irs_sizes:
            arrays = cfg.arrays.with_irs(*near_square_factors(n))
            if arrays.N == cfg.arrays.N and snr in cfg.snr_db:
                continue
            table = run_point(arrays, snr, cfg.trials, cfg.seed, methods, want, **kw)
            recs += records_for_point(table, metric, snr, arrays.N, cfg.seed, methods)
            log.info("%s: N=%d at %g dB done in %.1f s", metric, n, snr, table.wall_time)
    return recs


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(r.row())
    return buf.getvalue()


def write_csv(records, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(records_to_csv(records), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def run_experiment(cfg: ExperimentConfig, write=True):
    """Run every configured metric; returns ``{metric: [MetricRecord, ...]}``.

    When ``write`` is set, ``<out_dir>/<metric>.csv`` is written per metric
    (and a matplotlib script per metric if ``plot_script`` is set).
    """
    results = {}
    for metric in cfg.metrics:
        recs = run_metric(cfg, metric)
        results[metric] = recs
        if write:
            write_csv(recs, Path(cfg.out_dir) / f"{metric}.csv")
            if cfg.plot_script:
                write_plot_script(metric, Path(cfg.out_dir))
    return results


_PLOT_TEMPLATE = '''"""Plot {metric}.csv produced by the irs2d harness."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = list(csv.DictReader(open(here / "{metric}.csv", encoding="utf-8")))
x_key = "{x_key}"
series = defaultdict(list)
for r in rows:
    if r["metric"] != "{metric}":
        continue
    series[(r["method"], r["parameter"])].append((r, float(r["value"])))

params = sorted({{p for _, p in series}})
fig, axes = plt.subplots(1, len(params), figsize=(5 * len(params), 4), squeeze=False)
for ax, param in zip(axes[0], params):
    for (method, p), pts in sorted(series.items()):
        if p != param:
            continue
        pts = [(float(r[x_key]), v) for r, v in pts if r[x_key] != ""]
        pts.sort()
        ax.plot([x for x, _ in pts], [v for _, v in pts], marker="o", label=method)
    ax.set_title(param)
    ax.set_xlabel(x_key)
    ax.set_yscale("{yscale}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
fig.tight_layout()
fig.savefig(here / "{metric}.png", dpi=150)
'''


def write_plot_script(metric, out_dir: Path) -> Path:
    x_key = "n_irs" if metric == "complexity" else "snr_db"
    yscale = "linear" if metric == "se" else "log"
    path = Path(out_dir) / f"plot_{metric}.py"
    path.write_text(_PLOT_TEMPLATE.format(metric=metric, x_key=x_key, yscale=yscale),
                    encoding="utf-8")
    return path


def with_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if not overrides:
        return cfg
    merged = cfg.to_dict()
    merged.update(overrides)
    return ExperimentConfig.from_dict(merged)


__all__ = [
    "CSV_COLUMNS",
    "ConfigError",
    "ExperimentConfig",
    "MetricRecord",
    "run_experiment",
    "run_metric",
    "run_point",
    "records_to_csv",
    "read_csv",
]
