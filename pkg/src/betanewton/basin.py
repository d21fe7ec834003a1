"""Complex-plane grid sweeps: basin maps, entropy, and image rendering.

A sweep iterates every cell of a rectangular grid independently with the
two-step update from `betanewton.core`, labels each cell by the root it
reached (or -1 for divergent/failed cells), and aggregates per-grid metrics.
The kernel is vectorized over cells with per-step compaction; cells are
mathematically independent, so results are identical for any worker count.
"""

from __future__ import annotations

import colorsys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    ANNEALING,
    BetaSchedule,
    IterationConfig,
    ScalarProblem,
    iterate,
)

# fixed chunk height (rows of the real axis) so partitioning never depends
# on the worker count
_CHUNK_ROWS = 64

_ST_CONVERGED = 0
_ST_NUMFAIL = 1
_ST_MAXITER = 2

# a discovered root must actually satisfy the equation
_ROOT_RESIDUAL_TOL = 1e-10


class IncompatibleCovering(ValueError):
    """Entropy box size does not tile the grid exactly."""


class AllSamplesSingular(RuntimeError):
    """Every probe sample hit the derivative guard."""


@dataclass(frozen=True)
class GridSpec:
    """Evenly spaced rectangle of starting points, endpoints included.

    Cell (i, j) maps to re_coords[i] + 1j * im_coords[j].
    """

    re_min: float = -2.0
    re_max: float = 2.0
    im_min: float = -2.0
    im_max: float = 2.0
    nx: int = 1000
    ny: int = 1000

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("grid bounds must be increasing")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid dims must be positive")

    def re_coords(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.nx)

    def im_coords(self) -> np.ndarray:
        return np.linspace(self.im_min, self.im_max, self.ny)


@dataclass
class RootCatalog:
    """Ordered list of distinct roots; endpoints match within match_tol."""

    roots: List[complex] = field(default_factory=list)
    match_tol: float = 1e-6


@dataclass
class BasinMap:
    """Per-cell root label and iteration count over a grid.

    labels[i, j] is an index into catalog.roots, or -1 for cells that failed,
    timed out, or converged to nothing the catalog accepts.  max_iter is the
    iteration budget the sweep ran with (used for image shading).
    """

    grid: GridSpec
    labels: np.ndarray
    iter_counts: np.ndarray
    catalog: RootCatalog
    max_iter: int


@dataclass(frozen=True)
class SweepMetrics:
    """Aggregates over one sweep; divergent cells are excluded throughout."""

    mean_iterations: float
    convergence_pct: float
    wall_time_per_point: float
    total_points: int


def _sweep_chunk(
    p: ScalarProblem,
    z0: np.ndarray,
    sched: BetaSchedule,
    cfg: IterationConfig,
):
    """Iterate a flat array of starting points; returns (status, iters, final)."""
    n = z0.size
    z = z0.copy()
    alive = np.arange(n)
    final = z0.copy()
    iters = np.zeros(n, np.int32)
    status = np.full(n, _ST_MAXITER, np.int8)
    anneal = sched.mode == ANNEALING
    beta = sched.beta
    with np.errstate(all="ignore"):
        for step in range(1, cfg.max_iter + 1):
            fp = p.deriv(z)
            ok = np.abs(fp) > cfg.deriv_guard
            xhat = z - p.eval(z) / fp
            if anneal:
                fph = p.deriv(xhat)
                a = fp.real * fp.real + fp.imag * fp.imag
                b = fph.real * fph.real + fph.imag * fph.imag
                bet = 2.0 * a / (a + b)
            else:
                bet = beta
            znext = xhat - bet * (p.eval(xhat) / fp)
            good = ok & np.isfinite(znext.real) & np.isfinite(znext.imag)
            disp = np.abs(znext - z)
            conv = good & (disp < cfg.epsilon)
            fail = ~good
            cont = good & ~conv
            idx = alive[fail]
            final[idx] = z[fail]
            status[idx] = _ST_NUMFAIL
            iters[idx] = step - 1
            idx = alive[conv]
            final[idx] = znext[conv]
            status[idx] = _ST_CONVERGED
            iters[idx] = step
            z = znext[cont]
            alive = alive[cont]
            if alive.size == 0:
                break
        final[alive] = z
        iters[alive] = cfg.max_iter
    return status, iters, final


def _assign_labels(
    p: ScalarProblem,
    status: np.ndarray,
    final: np.ndarray,
    catalog: RootCatalog,
) -> np.ndarray:
    """Label converged endpoints against the catalog, growing it when needed.

    The catalog is seeded from known roots; unmatched endpoints are clustered
    serially in row-major first-seen order, so the result is independent of
    how the sweep was partitioned.  A new root must satisfy the residual
    bound and keep pairwise catalog distances above 2*match_tol.
    """
    n = final.size
    labels = np.full(n, -1, np.int32)
    conv = status == _ST_CONVERGED
    if not conv.any():
        return labels
    tol = catalog.match_tol
    pts = final[conv]
    lab = np.full(pts.size, -1, np.int32)
    dmin = np.full(pts.size, np.inf)
    for k, r in enumerate(catalog.roots):
        d = np.abs(pts - r)
        closer = d < dmin
        dmin[closer] = d[closer]
        lab[closer] = k
    lab[dmin > tol] = -1
    conv_idx = np.flatnonzero(conv)
    # discovery pass: first unmatched endpoint (row-major) founds a root or
    # is permanently rejected; repeat until none remain
    un = np.flatnonzero(lab == -1)
    with np.errstate(all="ignore"):
        while un.size:
            cand = complex(pts[un[0]])
            near_existing = any(abs(cand - r) <= 2 * tol for r in catalog.roots)
            residual = abs(complex(np.complex128(p.eval(np.complex128(cand)))))
            if near_existing or not residual < _ROOT_RESIDUAL_TOL:
                un = un[1:]
                continue
            catalog.roots.append(cand)
            k = len(catalog.roots) - 1
            hit = np.abs(pts[un] - cand) <= tol
            lab[un[hit]] = k
            un = un[~hit]
    labels[conv_idx] = lab
    return labels


# cells timed per sweep; per-cell clocks on every cell would dominate the run
_TIMING_SAMPLE_TARGET = 2048


def _time_per_point(
    p: ScalarProblem,
    re: np.ndarray,
    im: np.ndarray,
    ny: int,
    labels: np.ndarray,
    sched: BetaSchedule,
    cfg: IterationConfig,
) -> float:
    """Mean per-cell wall seconds over a row-major subsample of converged cells."""
    conv_idx = np.flatnonzero(labels >= 0)
    if conv_idx.size == 0:
        return float("nan")
    stride = max(1, conv_idx.size // _TIMING_SAMPLE_TARGET)
    sample = conv_idx[::stride]
    cfg = replace(cfg, trace=False)
    total = 0.0
    for flat in sample:
        z0 = complex(re[flat // ny], im[flat % ny])
        t0 = time.perf_counter()
        iterate(p, z0, sched, cfg)
        total += time.perf_counter() - t0
    return total / sample.size


def sweep(
    p: ScalarProblem,
    grid: GridSpec = GridSpec(),
    sched: BetaSchedule = BetaSchedule.fixed(0.0),
    cfg: IterationConfig = IterationConfig(),
    jobs: int = 1,
) -> Tuple[BasinMap, SweepMetrics]:
    """Iterate every grid cell; returns the basin map and its metrics.

    jobs > 1 runs fixed-size row chunks on a thread pool; chunk boundaries
    and all per-cell arithmetic are identical for every worker count, so the
    output is too.  wall_time_per_point is the method's per-cell execution
    time, measured with a monotonic clock summed over single-cell runs of a
    deterministic row-major subsample of converged cells; the batch kernel
    that fills the map is not what it times, since batch bookkeeping costs
    would drown out the per-step evaluation costs being compared.
    """
    re = grid.re_coords()
    im = grid.im_coords()
    n = grid.nx * grid.ny
    status = np.empty(n, np.int8)
    iters = np.empty(n, np.int32)
    final = np.empty(n, np.complex128)

    starts = list(range(0, grid.nx, _CHUNK_ROWS))

    def run_chunk(i0):
        i1 = min(i0 + _CHUNK_ROWS, grid.nx)
        z0 = (re[i0:i1, None] + 1j * im[None, :]).ravel()
        return i0 * grid.ny, (i1 - i0) * grid.ny, _sweep_chunk(p, z0, sched, cfg)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_chunk, starts))
    else:
        results = [run_chunk(i0) for i0 in starts]

    for off, ln, (st, it, fi) in results:
        status[off:off + ln] = st
        iters[off:off + ln] = it
        final[off:off + ln] = fi

    catalog = RootCatalog(list(p.known_roots), 1e-6)
    labels = _assign_labels(p, status, final, catalog)

    converged = labels >= 0
    n_conv = int(converged.sum())
    mean_iters = float(iters[converged].mean()) if n_conv else float("nan")
    per_point = _time_per_point(p, re, im, grid.ny, labels, sched, cfg)
    metrics = SweepMetrics(
        mean_iterations=mean_iters,
        convergence_pct=100.0 * n_conv / n,
        wall_time_per_point=per_point,
        total_points=n,
    )
    bmap = BasinMap(
        grid=grid,
        labels=labels.reshape(grid.nx, grid.ny),
        iter_counts=iters.reshape(grid.nx, grid.ny),
        catalog=catalog,
        max_iter=cfg.max_iter,
    )
    return bmap, metrics


def basin_entropy(bmap: BasinMap, box: int = 20) -> float:
    """Mean per-tile Gibbs entropy of outcome labels over box*box tiles.

    Divergence (-1) counts as its own outcome class, so a map with K roots
    has at most K+1 classes and the result lies in [0, ln(K+1)].
    """
    nx, ny = bmap.labels.shape
    if box < 1 or nx % box or ny % box:
        raise IncompatibleCovering(
            f"box {box} does not tile a {nx}x{ny} grid")
    k = len(bmap.catalog.roots) + 1
    t = (bmap.labels + 1).astype(np.int64)
    tiles = (t.reshape(nx // box, box, ny // box, box)
             .transpose(0, 2, 1, 3)
             .reshape(-1, box * box))
    nt = tiles.shape[0]
    offset = (np.arange(nt, dtype=np.int64)[:, None] * k + tiles).ravel()
    counts = np.bincount(offset, minlength=nt * k).reshape(nt, k)
    prob = counts / float(box * box)
    with np.errstate(all="ignore"):
        terms = np.where(prob > 0, -prob * np.log(prob), 0.0)
    return float(terms.sum(axis=1).mean())


def entropy_beta_sweep(
    p: ScalarProblem,
    grid: GridSpec,
    cfg: IterationConfig,
    beta_lo: float,
    beta_hi: float,
    step: float,
    box: int = 20,
    jobs: int = 1,
) -> List[Tuple[float, float]]:
    """Basin entropy at each fixed beta in [beta_lo, beta_hi] with the given step."""
    if step <= 0:
        raise ValueError("step must be positive")
    if beta_lo > beta_hi:
        raise ValueError("beta_lo must not exceed beta_hi")
    count = int(np.floor((beta_hi - beta_lo) / step + 1e-9)) + 1
    curve = []
    for k in range(count):
        beta = beta_lo + k * step
        bmap, _ = sweep(p, grid, BetaSchedule.fixed(beta), cfg, jobs)
        curve.append((beta, basin_entropy(bmap, box)))
    return curve


def default_palette(n: int) -> List[Tuple[int, int, int]]:
    """n root hues spread by the golden angle, plus a dark divergent entry."""
    pal = []
    for k in range(n):
        h = (0.12 + 0.61803398875 * k) % 1.0
        r, g, b = colorsys.hsv_to_rgb(h, 0.85, 1.0)
        pal.append((int(round(255 * r)), int(round(255 * g)), int(round(255 * b))))
    pal.append((40, 40, 40))
    return pal


def render_ppm(bmap: BasinMap, palette: Optional[Sequence[Tuple[int, int, int]]] = None) -> bytes:
    """Binary PPM (P6) of the basin map; byte-exact for identical inputs.

    Hue comes from the root label (the last palette entry is reserved for
    divergent cells, drawn at full brightness); brightness falls linearly
    from 1.0 at zero iterations to 0.25 at the sweep's max_iter.
    """
    k = len(bmap.catalog.roots)
    if palette is None:
        palette = default_palette(k)
    if len(palette) < k + 1:
        raise ValueError(f"palette needs at least {k + 1} entries, got {len(palette)}")
    pal = np.asarray(palette, dtype=np.float64)
    # image row 0 is the top scanline: largest imaginary part
    lab = bmap.labels[:, ::-1].T
    cnt = bmap.iter_counts[:, ::-1].T
    divergent = lab < 0
    color_idx = np.where(divergent, len(palette) - 1, lab)
    rgb = pal[color_idx]
    bright = 1.0 - 0.75 * np.minimum(cnt, bmap.max_iter) / max(bmap.max_iter, 1)
    bright = np.where(divergent, 1.0, bright)
    img = np.rint(rgb * bright[:, :, None]).astype(np.uint8)
    header = f"P6\n{bmap.grid.nx} {bmap.grid.ny}\n255\n".encode("ascii")
    return header + img.tobytes()


def basin_map_to_json(bmap: BasinMap) -> dict:
    """Row-major JSON-ready dump of labels, counts, catalog, and grid."""
    g = bmap.grid
    return {
        "grid": {
            "re_min": g.re_min, "re_max": g.re_max,
            "im_min": g.im_min, "im_max": g.im_max,
            "nx": g.nx, "ny": g.ny,
        },
        "max_iter": bmap.max_iter,
        "labels": bmap.labels.ravel().tolist(),
        "iter_counts": bmap.iter_counts.ravel().tolist(),
        "roots": [[r.real, r.imag] for r in bmap.catalog.roots],
        "match_tol": bmap.catalog.match_tol,
    }


def singularity_probe(
    p: ScalarProblem,
    x_s: complex,
    radius: float,
    n_samples: int,
    beta: float = 0.0,
) -> float:
    """Spread of one update applied to a small circle around a critical point.

    Samples n_samples points on the circle of the given radius about x_s,
    applies one two-step update at the given beta, and returns the maximum
    pairwise distance of the images: a measure of how violently the map
    stretches a neighborhood of f' = 0.
    """
    from .core import DerivativeUnderflow, NonFiniteStep, extended_step

    if not abs(np.complex128(p.deriv(np.complex128(x_s)))) < 1e-8:
        raise ValueError(f"{x_s} is not a near-critical point of {p.id}")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    angles = 2.0 * np.pi * np.arange(n_samples) / n_samples
    images = []
    for t in angles:
        z0 = np.complex128(x_s) + radius * np.complex128(np.cos(t) + 1j * np.sin(t))
        try:
            xnext, _ = extended_step(p, z0, beta)
        except (DerivativeUnderflow, NonFiniteStep):
            continue
        images.append(complex(xnext))
    if not images:
        raise AllSamplesSingular("all samples singular")
    pts = np.asarray(images)
    diff = np.abs(pts[:, None] - pts[None, :])
    return float(diff.max())
