"""Disorder ensembles and the deviation diagnostics against the random-state baseline.

The independent statistical unit is a disorder realization: the entropies of
all eigenstates of one Floquet operator are correlated, so every error bar
here is computed from per-realization block means.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import models
from .entanglement import (
    REAL_GAUSSIAN,
    VON_NEUMANN,
    EntropySamples,
    eigenstate_entropies,
    sample_random_state_entropies,
)
from .errors import CapacityError, DegenerateDistributionError, ParameterError, PartialReportError
from .hilbert import Bipartition, HilbertSpace
from .spectra import SpacingSample, eigendecompose_unitary, spacing_ks_distance, unfolded_spacings

# Realizations per L = 6, 8, ..., 20 used for the published figures.
PAPER_REALIZATIONS = {
    models.KFIM: dict(zip(range(6, 21, 2), (300, 250, 100, 30, 20, 25, 15, 4))),
    models.CNN: dict(zip(range(6, 21, 2), (300, 250, 500, 100, 30, 25, 15, 4))),
    models.CNNNN: dict(zip(range(6, 21, 2), (300, 250, 500, 100, 30, 25, 15, 4))),
    models.TENSOR_RMT: dict(zip(range(6, 21, 2), (500, 300, 100, 50, 30, 25, 15, 4))),
}
PAPER_BASELINE_STATES = dict(zip(range(6, 21, 2), (25600, 76800, 204800, 204800, 491520, 327680, 20000, 10000)))

PLATEAU_SLOPE = 0.02
KL_EPS = 1e-12
THREADS_ENV = "KICKCHAIN_THREADS"


def default_realizations(model: str, L: int) -> int:
    table = PAPER_REALIZATIONS[model]
    return table.get(L, table[min(table, key=lambda k: abs(k - L))])


def default_baseline_count(L: int) -> int:
    return PAPER_BASELINE_STATES.get(L, PAPER_BASELINE_STATES[min(PAPER_BASELINE_STATES, key=lambda k: abs(k - L))])


@dataclass
class EnsembleSpec:
    model: str
    Ls: tuple
    realizations: dict = field(default_factory=dict)
    master_seed: int = 0
    L1: dict = field(default_factory=dict)
    baseline_counts: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)
    kind: str = VON_NEUMANN
    baseline_ensemble: str = REAL_GAUSSIAN
    max_L: int = models.DENSE_LIMIT

    def __post_init__(self):
        if self.model not in models.MODELS:
            raise ParameterError(f"unknown model {self.model!r}")
        self.Ls = tuple(int(L) for L in self.Ls)
        if isinstance(self.realizations, int):
            self.realizations = {L: self.realizations for L in self.Ls}
        for L in self.Ls:
            if L not in self.L1 and L % 2:
                raise ParameterError(f"equal bipartition needs even L, got {L}")
            if self.n_realizations(L) < 1:
                raise ParameterError(f"need at least one realization at L={L}")

    def n_realizations(self, L: int) -> int:
        return int(self.realizations.get(L, default_realizations(self.model, L)))

    def baseline_count(self, L: int) -> int:
        return int(self.baseline_counts.get(L, default_baseline_count(L)))

    def split(self, L: int) -> Bipartition:
        return Bipartition.for_space(HilbertSpace(L), self.L1.get(L))


@dataclass
class Cell:
    """Pooled samples of one (model, L) cell."""

    model: str
    L: int
    entropies: EntropySamples
    spacings: SpacingSample
    seeds: list


def _realization(model: str, L: int, index: int, master_seed: int, L1, kind: str, overrides: dict,
                 max_L: int = models.DENSE_LIMIT):
    seq = models.derive_seed_sequence(master_seed, model, L, index)
    rng = np.random.Generator(np.random.PCG64(seq))
    op = models.build(model, L, rng, seed=index, max_L=max_L, **overrides)
    decomp = eigendecompose_unitary(op)
    split = Bipartition.for_space(op.space, L1)
    ent = eigenstate_entropies(decomp, split, kind, block=index).values
    spacings = unfolded_spacings(decomp.phases).spacings
    return ent, spacings, models.derived_seed(master_seed, model, L, index)


def _task(args):
    # one BLAS thread per task so results do not depend on the worker count
    model, L, index = args[:3]
    with threadpool_limits(limits=1):
        try:
            return _realization(*args)
        except CapacityError as exc:
            raise CapacityError(f"{model} L={L} realization {index}: {exc}") from exc


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    return max(1, int(threads))


def run_cell(spec: EnsembleSpec, L: int, threads: int | None = None) -> Cell:
    n = spec.n_realizations(L)
    tasks = [(spec.model, L, r, spec.master_seed, spec.L1.get(L), spec.kind, spec.overrides, spec.max_L)
             for r in range(n)]
    threads = resolve_threads(threads)
    if threads == 1:
        results = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_task, tasks))
    split = spec.split(L)
    N = split.N
    values = np.concatenate([r[0] for r in results])
    blocks = np.repeat(np.arange(n), N)
    entropies = EntropySamples(values, split, spec.kind, blocks,
                               {"model": spec.model, "L": L, "master_seed": spec.master_seed})
    spacings = SpacingSample(np.concatenate([r[1] for r in results]),
                             {"model": spec.model, "L": L, "blocks": blocks})
    return Cell(spec.model, L, entropies, spacings, [r[2] for r in results])


def run_ensemble(spec: EnsembleSpec, threads: int | None = None) -> dict:
    """Build, diagonalize and analyse every realization; returns ``{L: Cell}``."""
    return {L: run_cell(spec, L, threads) for L in spec.Ls}


def baseline_samples(split: Bipartition, count: int, master_seed: int, ensemble: str = REAL_GAUSSIAN,
                     kind: str = VON_NEUMANN) -> EntropySamples:
    tag = f"baseline/{ensemble}/{split.N1}x{split.N2}"
    rng = models.derive_rng(master_seed, tag, split.L, count)
    with threadpool_limits(limits=1):
        return sample_random_state_entropies(split.N1, split.N2, count, ensemble, kind, rng,
                                             source={"master_seed": master_seed})


# ---------------------------------------------------------------------------
# deviation diagnostics


def _values(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


def _check_split(a, b):
    sa, sb = getattr(a, "split", None), getattr(b, "split", None)
    if sa is not None and sb is not None and sa != sb:
        raise ParameterError(f"bipartition mismatch: {sa} vs {sb}")


def _std(x: np.ndarray) -> float:
    if x.size < 2:
        raise ParameterError("need at least two values for a standard deviation")
    return float(np.std(x, ddof=1))


def delta_avg(samples, baseline) -> float:
    _check_split(samples, baseline)
    a, b = _values(samples), _values(baseline)
    if a.size == 0 or b.size == 0:
        raise ParameterError("empty sample")
    return abs(float(np.mean(a)) - float(np.mean(b)))


def delta_std(samples, baseline) -> float:
    _check_split(samples, baseline)
    return abs(_std(_values(samples)) - _std(_values(baseline)))


def ratio_R(samples, baseline) -> float:
    """``delta_avg / sigma(samples)``; the spread is that of the model, not the baseline."""
    sigma = _std(_values(samples))
    if sigma == 0.0:
        raise DegenerateDistributionError("model entropies have zero spread")
    return delta_avg(samples, baseline) / sigma


def rescale_chi(samples, baseline) -> np.ndarray:
    """``(S - mean(baseline)) / sigma(baseline)``."""
    b = _values(baseline)
    sigma = _std(b)
    if sigma == 0.0:
        raise DegenerateDistributionError("baseline entropies have zero spread")
    return (_values(samples) - float(np.mean(b))) / sigma


def jackknife_ratio_stderr(samples: EntropySamples, baseline) -> float | None:
    """Delete-one-realization jackknife error of :func:`ratio_R`."""
    labels = np.unique(samples.blocks)
    n = labels.size
    if n < 2:
        return None
    base_mean = float(np.mean(_values(baseline)))
    x = samples.values
    reps = np.empty(n)
    for k, label in enumerate(labels):
        keep = x[samples.blocks != label]
        reps[k] = abs(keep.mean() - base_mean) / np.std(keep, ddof=1)
    return float(math.sqrt((n - 1) / n * np.sum((reps - reps.mean()) ** 2)))


@dataclass
class Histogram:
    edges: np.ndarray
    density: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def mass(self) -> np.ndarray:
        return self.density * self.widths


_MAX_BINS = 2000


def shared_edges(*samples, bins="fd") -> np.ndarray:
    """Common bin edges over the union of all samples (Freedman-Diaconis by default)."""
    pooled = np.concatenate([_values(s).ravel() for s in samples])
    if pooled.size == 0:
        raise ParameterError("cannot bin an empty sample")
    lo, hi = float(pooled.min()), float(pooled.max())
    if lo == hi:
        return np.array([lo - 0.5, hi + 0.5])
    if bins == "fd":
        # numpy's rule, but with the bin count capped before anything is allocated
        iqr = float(np.subtract(*np.percentile(pooled, [75, 25])))
        width = 2.0 * iqr / np.cbrt(pooled.size)
        n_bins = 1 if width <= 0 else min(math.ceil((hi - lo) / width), _MAX_BINS)
        return np.linspace(lo, hi, max(n_bins, 1) + 1)
    return np.histogram_bin_edges(pooled, bins=bins)


def histogram(values, bins="fd", edges=None) -> Histogram:
    """Density-normalized histogram; pass ``edges`` to reuse a shared partition."""
    x = _values(values).ravel()
    if x.size == 0:
        raise ParameterError("cannot bin an empty sample")
    if edges is None:
        edges = shared_edges(x, bins=bins)
    edges = np.asarray(edges, dtype=float)
    counts, _ = np.histogram(x, bins=edges)
    mass = counts / counts.sum() if counts.sum() else counts.astype(float)
    return Histogram(edges, mass / np.diff(edges))


def paired_histograms(a, b, bins="fd") -> tuple[Histogram, Histogram]:
    edges = shared_edges(a, b, bins=bins)
    return histogram(a, edges=edges), histogram(b, edges=edges)


def _check_edges(p: Histogram, q: Histogram):
    if p.edges.shape != q.edges.shape or not np.array_equal(p.edges, q.edges):
        raise ParameterError("histograms must share bin edges")


def kl_divergence(p: Histogram, q: Histogram, eps: float = KL_EPS) -> float:
    """Discretized ``KL(p || q)``; empty ``q`` bins are floored at ``eps``."""
    _check_edges(p, q)
    w = p.widths
    mask = p.density > 0
    qd = np.maximum(q.density[mask], eps)
    return float(max(np.sum(p.density[mask] * np.log(p.density[mask] / qd) * w[mask]), 0.0))


def kl_floor_hit(p: Histogram, q: Histogram, eps: float = KL_EPS) -> bool:
    """True when ``p`` has mass where ``q`` is below the floor, i.e. KL is floor-dominated."""
    _check_edges(p, q)
    return bool(np.any((p.density > 0) & (q.density < eps)))


def js_divergence(p: Histogram, q: Histogram) -> float:
    """Jensen-Shannon divergence, bounded by ``ln 2``."""
    _check_edges(p, q)
    m = Histogram(p.edges, 0.5 * (p.density + q.density))
    return min(0.5 * (kl_divergence(p, m) + kl_divergence(q, m)), math.log(2.0))


# ---------------------------------------------------------------------------
# null distributions for "baseline against itself"


def permutation_null_R(baseline, n_model: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """``ratio_R`` between a random subset of the baseline and the remaining values."""
    x = _values(baseline)
    n = min(int(n_model), x.size // 2)
    out = np.empty(reps)
    for k in range(reps):
        perm = rng.permutation(x.size)
        a, b = x[perm[:n]], x[perm[n:]]
        out[k] = abs(a.mean() - b.mean()) / np.std(a, ddof=1)
    return out


def resampling_null_chi_js(baseline, n_model: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """JS divergence of chi-histograms for baseline subsets against the rest of the baseline."""
    x = _values(baseline)
    n = min(int(n_model), x.size // 2)
    out = np.empty(reps)
    for k in range(reps):
        perm = rng.permutation(x.size)
        a, b = x[perm[:n]], x[perm[n:]]
        p, q = paired_histograms(rescale_chi(a, b), rescale_chi(b, b))
        out[k] = js_divergence(p, q)
    return out


# ---------------------------------------------------------------------------
# reports


@dataclass
class CellReport:
    model: str
    L: int
    N1: int
    N2: int
    realizations: int
    n_samples: int
    n_baseline: int
    mean_S1: float
    std_S1: float
    mean_S1_stderr: float | None
    mean_COE: float
    std_COE: float
    mean_COE_stderr: float | None
    delta_avg: float
    delta_std: float
    ratio_R: float
    ratio_R_stderr: float | None
    kl_divergence: float
    kl_floored: bool
    js_divergence: float
    chi_js_divergence: float
    spacing_ks: float
    hist_S1: Histogram
    hist_COE: Histogram
    hist_chi: Histogram
    hist_chi_COE: Histogram
    chi_samples: np.ndarray

    SUMMARY_COLUMNS = ("model", "L", "mean_S1", "std_S1", "mean_COE", "std_COE",
                       "delta_avg", "delta_std", "ratio_R", "kl", "js")

    def summary_row(self) -> dict:
        row = {k: getattr(self, k) for k in self.SUMMARY_COLUMNS[:-2]}
        row["kl"] = self.kl_divergence
        row["js"] = self.js_divergence
        return row


def compare_cell(cell: Cell, baseline: EntropySamples, bins="fd") -> CellReport:
    s, b = cell.entropies, baseline
    hs, hb = paired_histograms(s, b, bins)
    chi, chi_b = rescale_chi(s, b), rescale_chi(b, b)
    hc, hcb = paired_histograms(chi, chi_b, bins)
    return CellReport(
        model=cell.model, L=cell.L, N1=s.split.N1, N2=s.split.N2,
        realizations=int(np.unique(s.blocks).size), n_samples=len(s), n_baseline=len(b),
        mean_S1=float(np.mean(s.values)), std_S1=_std(s.values), mean_S1_stderr=s.mean_stderr(),
        mean_COE=float(np.mean(b.values)), std_COE=_std(b.values), mean_COE_stderr=b.mean_stderr(),
        delta_avg=delta_avg(s, b), delta_std=delta_std(s, b), ratio_R=ratio_R(s, b),
        ratio_R_stderr=jackknife_ratio_stderr(s, b),
        kl_divergence=kl_divergence(hs, hb), kl_floored=kl_floor_hit(hs, hb),
        js_divergence=js_divergence(hs, hb), chi_js_divergence=js_divergence(hc, hcb),
        spacing_ks=spacing_ks_distance(cell.spacings),
        hist_S1=hs, hist_COE=hb, hist_chi=hc, hist_chi_COE=hcb, chi_samples=chi,
    )


def classify_trend(Ls, ratios, plateau_slope: float = PLATEAU_SLOPE) -> str:
    """Label the behaviour of R over L by the sign of a least-squares slope.

    ``approaching`` (R falls: distributions merge), ``close-but-distinct``
    (R flat: persistent offset of order one width), ``separating`` (R grows:
    distinct peaks).
    """
    Ls = np.asarray(Ls, dtype=float)
    if Ls.size < 2:
        return "undetermined"
    slope = np.polyfit(Ls, np.asarray(ratios, dtype=float), 1)[0]
    if abs(slope) < plateau_slope:
        return "close-but-distinct"
    return "approaching" if slope < 0 else "separating"


@dataclass
class ComparisonReport:
    model: str
    master_seed: int
    cells: list
    trend: str

    def cell(self, L: int) -> CellReport:
        for c in self.cells:
            if c.L == L:
                return c
        raise KeyError(L)


def build_report(spec: EnsembleSpec, cells: dict, baselines: dict, bins="fd") -> ComparisonReport:
    missing = [(spec.model, L) for L in spec.Ls if L not in cells or L not in baselines]
    if missing:
        raise PartialReportError(missing)
    reports = [compare_cell(cells[L], baselines[L], bins) for L in spec.Ls]
    trend = classify_trend([c.L for c in reports], [c.ratio_R for c in reports])
    return ComparisonReport(spec.model, spec.master_seed, reports, trend)


def run_baselines(spec: EnsembleSpec) -> dict:
    return {L: baseline_samples(spec.split(L), spec.baseline_count(L), spec.master_seed,
                                spec.baseline_ensemble, spec.kind)
            for L in spec.Ls}
