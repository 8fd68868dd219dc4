"""Figure-data sweeps and their deterministic CSV serialization."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import catalog, gaussian
from .bitcorr import optimize_q
from .config import DEFAULT, Settings
from .errors import NotConverged, OutOfRange

FIG1_COLUMNS = ("family", "scaled_negativity", "Q", "lambda_a", "lambda_b", "c_x", "c_p")
FIG2_COLUMNS = ("r", "T", "Q_ps", "N_ps", "Q_tmsv", "N_tmsv", "scaled_N_ps", "status")
MIXTURE_COLUMNS = ("r", "p", "N_m", "Q_analytic", "Q_numeric")


def fmt(value) -> str:
    """12 significant digits, locale-independent; strings pass through."""
    if isinstance(value, str):
        return value
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return format(float(value), ".12g")


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def parallel_map(func, items, workers: int = 1, chunksize: int = 1) -> list:
    """Ordered map; rows come back in input order whatever the completion order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items, chunksize=chunksize))


@dataclass(frozen=True)
class SweepSpec:
    """A family template with parameters varied over ``(min, max, steps)`` ranges."""

    family: catalog.FamilyParams
    varied: dict = field(default_factory=dict)
    outputs: tuple = ("Q", "N")
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        accepted = catalog.FAMILY_KEYS[self.family.kind]
        for name, (lo, hi, steps) in self.varied.items():
            if name not in accepted:
                raise OutOfRange(f"{self.family.kind} has no parameter {name!r}")
            if steps < 1:
                raise OutOfRange("steps must be at least 1")

    def axis(self, name: str) -> np.ndarray:
        lo, hi, steps = self.varied[name]
        return np.linspace(lo, hi, int(steps))

    def points(self) -> list[catalog.FamilyParams]:
        names = list(self.varied)
        grids = np.meshgrid(*[self.axis(n) for n in names], indexing="ij")
        flat = [g.ravel() for g in grids]
        return [self.family.replace(**{n: float(f[i]) for n, f in zip(names, flat)}) for i in range(flat[0].size)]


# ---------------------------------------------------------------------------
# random Gaussian states against their negativity


def _fig1_row(sf_tuple, family="random"):
    sf = gaussian.StandardForm(*sf_tuple)
    n, _ = gaussian.negativity_gaussian(sf.to_cm())
    return (family, float(gaussian.scaled_negativity(n)), gaussian.q_gaussian_closed(sf), *sf.as_tuple())


def _fig1_chunk(chunk):
    return [_fig1_row(t) for t in chunk]


def fig1_rows(
    samples: int,
    seed: int,
    settings: Settings = DEFAULT,
    workers: int = 1,
    curve_points: int = 100,
    family_points: int = 51,
) -> list[tuple]:
    """Random states, then the pure-state curve and both boundary families.

    States are drawn sequentially from one seeded generator, so the sample
    set does not depend on ``workers``; only the per-row evaluation is
    spread out.
    """
    if samples < 1:
        raise OutOfRange("samples must be at least 1")
    rng = np.random.default_rng(seed)
    ranges = gaussian.SamplingRanges(lambda_max=settings.lambda_max)
    states = [
        gaussian.standard_form(gaussian.random_gaussian_cm(rng, ranges, settings.max_attempts)).as_tuple()
        for _ in range(samples)
    ]
    size = max(1, math.ceil(len(states) / max(1, 4 * workers)))
    chunks = [states[i : i + size] for i in range(0, len(states), size)]
    rows = [row for chunk in parallel_map(_fig1_chunk, chunks, workers) for row in chunk]

    for s in np.linspace(0.0, 0.99, curve_points):
        n = s / (2 * (1 - s))
        sf = gaussian.tmsv_standard_form(0.5 * math.log1p(2 * n))
        rows.append(("pure", float(s), gaussian.q_pure_of_negativity(n), *sf.as_tuple()))
    for kind in ("separable", "perfect"):
        for eps in np.linspace(0.0, 1.0, family_points):
            sf = gaussian.boundary_family(kind, float(eps), settings.boundary_lambda)
            rows.append(_fig1_row(sf.as_tuple(), kind))
    return rows


# ---------------------------------------------------------------------------
# photon-subtracted versus two-mode squeezed states


def _fig2_row(args):
    r, T, settings = args
    n_ps = catalog.ps_negativity(r, T)
    status = "ok"
    try:
        q_ps = catalog.q_ps_series(r, T, settings=settings)
    except NotConverged:
        q_ps, status = float("nan"), "not_converged"
    return (
        r,
        T,
        q_ps,
        n_ps,
        catalog.tmsv_q(r),
        catalog.tmsv_negativity(r),
        float(gaussian.scaled_negativity(n_ps)),
        status,
    )


def fig2_rows(r_grid, t_grid, settings: Settings = DEFAULT, workers: int = 1) -> list[tuple]:
    """One row per ``(r, T)``, ``r`` varying slowest."""
    jobs = [(float(r), float(t), settings) for r in r_grid for t in t_grid]
    return parallel_map(_fig2_row, jobs, workers, chunksize=8)


# ---------------------------------------------------------------------------
# mixtures of a squeezed state with the vacuum


def _mixture_row(args):
    r, p, settings = args
    rho, (n_m, q_analytic) = catalog.mixture_tmsv_vacuum(r, p, settings)
    q_numeric = optimize_q(rho, settings).q
    return (r, p, n_m, q_analytic, q_numeric)


def mixture_rows(r_grid, p_grid, settings: Settings = DEFAULT, workers: int = 1) -> list[tuple]:
    jobs = [(float(r), float(p), settings) for r in r_grid for p in p_grid]
    return parallel_map(_mixture_row, jobs, workers)


# ---------------------------------------------------------------------------


def crossover(r_values, ps_values, tmsv_values) -> float | None:
    """First ``r`` bracket where ``ps - tmsv`` turns from positive to non-positive.

    Returns the linear-interpolated crossing point, or ``None``.
    """
    r = np.asarray(r_values, dtype=float)
    diff = np.asarray(ps_values, dtype=float) - np.asarray(tmsv_values, dtype=float)
    for i in range(len(r) - 1):
        if np.isfinite(diff[i]) and np.isfinite(diff[i + 1]) and diff[i] > 0 >= diff[i + 1]:
            return float(r[i] + (r[i + 1] - r[i]) * diff[i] / (diff[i] - diff[i + 1]))
    return None


def grid_axis(lo: float, hi: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise OutOfRange("steps must be at least 1")
    return np.linspace(lo, hi, int(steps))

