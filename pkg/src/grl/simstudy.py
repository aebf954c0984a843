"""Monte Carlo comparison of the eight estimators.

For every true parameter pair and sample size, ``N`` samples are drawn by
inverse-transform sampling and each is fitted by every method. Absolute
bias, MSE and MRE are averaged over converged fits, then methods are
ranked row by row, per block, and overall.

Seeds: replicate ``r`` of sample size ``n`` at parameter index ``k`` uses
``SeedSequence(master_seed, spawn_key=(k, n, r))``. All methods see the
same sample within a replicate.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distribution import GrlParams, sample_inverse
from .estimators import EstimationOptions, Method, estimate

__all__ = [
    "DEFAULT_THETAS",
    "DEFAULT_SIZES",
    "SimConfig",
    "CellStats",
    "CellResult",
    "RankTable",
    "SimReport",
    "replicate_seed",
    "run_cell",
    "rank_rows",
    "block_rows",
    "overall_ranking",
    "run_study",
    "consistency_check",
    "METRICS",
]

DEFAULT_THETAS = (
    (2.0, 0.5), (2.0, 2.5), (2.0, 0.7), (2.0, 3.5),
    (3.1, 0.5), (3.1, 2.5), (3.1, 0.7), (3.1, 3.5),
)
DEFAULT_SIZES = (30, 50, 80, 120, 200)

# row order within a block: |Bias|, MSE, MRE for lambda then alpha
METRICS = (
    ("abs_bias", "lambda"), ("abs_bias", "alpha"),
    ("mse", "lambda"), ("mse", "alpha"),
    ("mre", "lambda"), ("mre", "alpha"),
)


@dataclass(frozen=True)
class SimConfig:
    """Simulation design.

    ``start`` is ``"truth"`` (each fit is a local search from the true
    parameters, with a small initial simplex) or ``"moment"`` (the default
    multi-start used by :func:`estimate`).
    """

    thetas: tuple = DEFAULT_THETAS
    sample_sizes: tuple = DEFAULT_SIZES
    replicates: int = 500
    methods: tuple = tuple(Method)
    master_seed: int = 2024
    start: str = "truth"
    n_starts: int = 1
    step: tuple = (0.1, 0.1)

    def __post_init__(self):
        thetas = tuple(GrlParams(*t) if not isinstance(t, GrlParams) else t for t in self.thetas)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "methods", tuple(Method.parse(m) for m in self.methods))
        object.__setattr__(self, "step", tuple(float(s) for s in self.step))
        if not thetas:
            raise ValueError("at least one parameter pair is required")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if any(n < 3 for n in self.sample_sizes) or not self.sample_sizes:
            raise ValueError("sample sizes must be >= 3")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("methods must be distinct")
        if self.start not in ("truth", "moment"):
            raise ValueError("start must be 'truth' or 'moment'")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")

    def options(self, theta: GrlParams, seed: int) -> EstimationOptions:
        if self.start == "truth":
            return EstimationOptions(
                start=theta.as_tuple(), n_starts=self.n_starts, step=self.step, seed=seed
            )
        return EstimationOptions(n_starts=self.n_starts, seed=seed)


@dataclass(frozen=True)
class CellStats:
    abs_bias_lambda: float
    abs_bias_alpha: float
    mse_lambda: float
    mse_alpha: float
    mre_lambda: float
    mre_alpha: float
    failures: int
    n_ok: int
    # standard errors of the two MSE estimates across replicates
    mse_se_lambda: float = math.nan
    mse_se_alpha: float = math.nan

    def metric(self, name: str, param: str) -> float:
        return getattr(self, f"{name}_{param}")


@dataclass(frozen=True)
class CellResult:
    theta: GrlParams
    n: int
    stats: dict  # Method -> CellStats


def replicate_seed(master_seed: int, theta_index: int, n: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(theta_index, n, rep))


def _aggregate(theta: GrlParams, estimates: list) -> CellStats:
    ok = np.array([e for e in estimates if e is not None], dtype=float).reshape(-1, 2)
    failures = len(estimates) - ok.shape[0]
    if ok.shape[0] == 0:
        nan = math.nan
        return CellStats(nan, nan, nan, nan, nan, nan, failures=failures, n_ok=0)
    truth = np.array(theta.as_tuple())
    err = ok - truth
    ae = np.abs(err)
    se = err * err
    k = ok.shape[0]
    mse_se = se.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.array([math.nan, math.nan])
    return CellStats(
        abs_bias_lambda=float(ae[:, 0].mean()), abs_bias_alpha=float(ae[:, 1].mean()),
        mse_lambda=float(se[:, 0].mean()), mse_alpha=float(se[:, 1].mean()),
        mre_lambda=float((ae[:, 0] / truth[0]).mean()), mre_alpha=float((ae[:, 1] / truth[1]).mean()),
        failures=failures, n_ok=k,
        mse_se_lambda=float(mse_se[0]), mse_se_alpha=float(mse_se[1]),
    )


def _fit_replicate(args):
    config, theta_index, theta, n, rep = args
    seq = replicate_seed(config.master_seed, theta_index, n, rep)
    sample = sample_inverse(theta, n, seq)
    opts = config.options(theta, seed=int(seq.generate_state(1)[0]))
    out = {}
    for m in config.methods:
        try:
            r = estimate(m, sample, opts)
        except ValueError:
            out[m] = None
            continue
        out[m] = r.params.as_tuple() if r.converged else None
    return out


def run_cell(
    theta,
    n: int,
    methods,
    N: int,
    seed: int,
    *,
    theta_index: int = 0,
    config: SimConfig | None = None,
    workers: int = 1,
) -> dict:
    """Per-method :class:`CellStats` for one ``(theta, n)`` cell."""
    theta = theta if isinstance(theta, GrlParams) else GrlParams(*theta)
    if config is None:
        config = SimConfig(thetas=(theta,), sample_sizes=(n,), replicates=N, methods=tuple(methods), master_seed=seed)
    else:
        config = SimConfig(**{**config.__dict__, "methods": tuple(methods), "replicates": N, "master_seed": seed})
    jobs = [(config, theta_index, theta, n, rep) for rep in range(N)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            fits = list(ex.map(_fit_replicate, jobs, chunksize=max(1, N // (8 * workers))))
    else:
        fits = [_fit_replicate(j) for j in jobs]
    return {m: _aggregate(theta, [f[m] for f in fits]) for m in config.methods}


def rank_rows(values) -> np.ndarray:
    """Ascending ranks (1 = smallest); ties get the average of their positions."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("need at least two values to rank")
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(v.size)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and (sv[j + 1] == sv[i] or (np.isnan(sv[i]) and np.isnan(sv[j + 1]))):
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def block_rows(stats: dict, methods) -> np.ndarray:
    """Six-by-m matrix of row ranks (metrics in :data:`METRICS` order)."""
    return np.array([
        rank_rows([stats[m].metric(name, param) for m in methods]) for name, param in METRICS
    ])


@dataclass
class RankTable:
    methods: tuple
    # (theta index, n) -> 6 x m row ranks
    rows: dict = field(default_factory=dict)
    # (theta index, n) -> sum of row ranks per method
    block_sums: dict = field(default_factory=dict)
    # (theta index, n) -> rank of block sums
    block_ranks: dict = field(default_factory=dict)
    grand_total: np.ndarray | None = None
    overall_rank: np.ndarray | None = None


def overall_ranking(cells: list, methods) -> RankTable:
    """Partial and overall ranks from a list of ``((theta_index, n), stats)`` pairs."""
    methods = tuple(Method.parse(m) for m in methods)
    table = RankTable(methods=methods)
    total = np.zeros(len(methods))
    for key, stats in cells:
        rows = block_rows(stats, methods)
        sums = rows.sum(axis=0)
        br = rank_rows(sums)
        table.rows[key] = rows
        table.block_sums[key] = sums
        table.block_ranks[key] = br
        total += br
    table.grand_total = total
    table.overall_rank = rank_rows(total)
    return table


@dataclass
class SimReport:
    config: SimConfig
    cells: list  # list[CellResult], theta-major then n
    ranks: RankTable

    def cell(self, theta, n: int) -> CellResult:
        theta = theta if isinstance(theta, GrlParams) else GrlParams(*theta)
        for c in self.cells:
            if c.theta == theta and c.n == n:
                return c
        raise KeyError((theta, n))


def run_study(config: SimConfig, workers: int = 1, progress=None) -> SimReport:
    """Run every ``(theta, n)`` cell of ``config`` and rank the methods."""
    cells = []
    keyed = []
    for k, theta in enumerate(config.thetas):
        for n in config.sample_sizes:
            stats = run_cell(
                theta, n, config.methods, config.replicates, config.master_seed,
                theta_index=k, config=config, workers=workers,
            )
            cells.append(CellResult(theta, n, stats))
            keyed.append(((k, n), stats))
            if progress is not None:
                progress(theta, n)
    return SimReport(config, cells, overall_ranking(keyed, config.methods))


def consistency_check(report: SimReport, z: float = 0.0) -> dict:
    """Whether MSE and MRE are non-increasing in ``n`` for each method and theta.

    A step may rise by at most ``z`` Monte Carlo standard errors of the MSE
    (``z = 0`` demands strict monotonicity of the estimates themselves).
    MRE steps use the same relative slack. Returns
    ``{(theta, method): bool}``; a single sample size is vacuously consistent.
    """
    out = {}
    sizes = report.config.sample_sizes
    for theta in report.config.thetas:
        for m in report.config.methods:
            seq = [report.cell(theta, n).stats[m] for n in sizes]
            ok = True
            for a, b in zip(seq, seq[1:]):
                for p in ("lambda", "alpha"):
                    se = max(a.metric("mse_se", p), b.metric("mse_se", p))
                    se = 0.0 if math.isnan(se) else se
                    slack = z * se
                    if b.metric("mse", p) > a.metric("mse", p) + slack:
                        ok = False
                    rel = slack / a.metric("mse", p) if a.metric("mse", p) > 0 else 0.0
                    if b.metric("mre", p) > a.metric("mre", p) * (1.0 + rel):
                        ok = False
            out[(theta, m)] = ok
    return out
