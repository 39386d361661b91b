"""Monte Carlo diagnostics for density existence.

Samples configurations, computes Gamma[F] per sample, and reduces to the
statistics that matter for absolute continuity: fraction of samples with
det Gamma > 0 (scalar densities exist on the event Gamma > 0) and the rank
distribution (directions of degeneracy for vector functionals).

Determinism contract: each sample index owns its own counter-based RNG
stream, worker processes fill disjoint index ranges, and all reductions
happen in the parent in index order. Results are bit-identical for any
worker count.
"""

from __future__ import annotations

import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import BACKEND
from .errors import InvalidInput, LentParticleError, NumericError
from .lent_particle import DEFAULT_FD_STEP, carre_du_champ
from .point_process import sample_configuration

DET_TOL_SCALE = 1e-12
RANK_TOL = 1e-9
ERROR_BUDGET = 1e-3


def det_positive_mask(dets, eigenvalues, scale=DET_TOL_SCALE):
    """det > scale * (trace/d)^d, a per-sample floor at matrix magnitude.

    A determinant below the floor is numerically indistinguishable from a
    rank drop, so it does not count as positive.
    """
    dets = np.asarray(dets, dtype=float)
    eigenvalues = np.atleast_2d(np.asarray(eigenvalues, dtype=float))
    d = eigenvalues.shape[1]
    tol = scale * (eigenvalues.sum(axis=1) / d) ** d
    return dets > tol


def rank_statistics(eigenvalues, tol=RANK_TOL):
    """Per-sample numerical ranks and their histogram.

    Rank counts eigenvalues above tol times the largest one; the zero
    matrix has rank 0. Returns (ranks, histogram dict, frac_full_rank).
    """
    eigenvalues = np.atleast_2d(np.asarray(eigenvalues, dtype=float))
    n, d = eigenvalues.shape
    top = eigenvalues.max(axis=1)
    ranks = np.sum(eigenvalues > tol * top[:, None], axis=1)
    ranks[top <= 0.0] = 0
    hist = {r: int(np.sum(ranks == r)) for r in range(d + 1)}
    frac_full = float(np.mean(ranks == d)) if n else 0.0
    return ranks, hist, frac_full


@dataclass
class DiagnosticsReport:
    """Arrays and reductions from one Monte Carlo diagnostics run."""

    n_samples: int
    seed: int
    workers: int
    mode: str
    backend: str
    output_dim: int
    atom_counts: np.ndarray
    values: np.ndarray
    dets: np.ndarray
    eigenvalues: np.ndarray
    ranks: np.ndarray
    clamped: np.ndarray
    ok: np.ndarray
    errors: tuple
    frac_det_positive: float
    frac_full_rank: float
    rank_histogram: dict
    n_clamped: int
    value_mean: np.ndarray
    value_se: np.ndarray
    runtime_s: float


def _mc_chunk(payload, start, stop):
    """Fill per-sample arrays for indices [start, stop)."""
    F, measure, structure, seed, mode, fd_step = payload
    d = F.output_dim
    n = stop - start
    counts = np.zeros(n, dtype=np.int64)
    values = np.full((n, d), np.nan)
    dets = np.full(n, np.nan)
    eigs = np.full((n, d), np.nan)
    clamped = np.zeros(n, dtype=bool)
    ok = np.ones(n, dtype=bool)
    errors = []
    for j in range(n):
        i = start + j
        config = sample_configuration(measure, seed, index=i)
        counts[j] = config.count
        try:
            sample = carre_du_champ(F, config, structure, mode=mode,
                                    fd_step=fd_step, measure=measure)
            values[j] = F.evaluate(config)
            ev = np.linalg.eigvalsh(sample.matrix)
            eigs[j] = ev
            dets[j] = float(np.prod(ev))
            clamped[j] = sample.clamped
        except LentParticleError as exc:
            ok[j] = False
            errors.append((i, f"{type(exc).__name__}: {exc}"))
    return {"start": start, "counts": counts, "values": values, "dets": dets,
            "eigs": eigs, "clamped": clamped, "ok": ok, "errors": errors}


def parallel_chunks(worker, payload, n, workers, chunk_size=None):
    """Run worker(payload, start, stop) over [0, n) and return chunks in order.

    Single worker runs inline. Multi-worker runs fork where the platform
    has it (cheap, and independent of how the parent was launched) and fall
    back to spawn elsewhere. Chunk results come back ordered by start
    index, which keeps every reduction deterministic.
    """
    if n <= 0:
        return []
    workers = max(1, int(workers))
    if chunk_size is None:
        chunk_size = max(1, math.ceil(n / (workers * 4)))
    spans = [(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]
    if workers == 1:
        return [worker(payload, s, e) for s, e in spans]
    methods = multiprocessing.get_all_start_methods()
    ctx = multiprocessing.get_context("fork" if "fork" in methods else "spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        futures = [pool.submit(worker, payload, s, e) for s, e in spans]
        return [f.result() for f in futures]


def run_monte_carlo(F, measure, structure, n_samples, seed, workers=1,
                    mode="auto", fd_step=DEFAULT_FD_STEP, det_tol_scale=DET_TOL_SCALE,
                    rank_tol=RANK_TOL):
    """Sample n_samples configurations and diagnose Gamma[F] on each.

    Errors on individual samples are recorded and excluded from the
    reductions; more than 0.1% of them aborts the run, since at that point
    the model and the functional disagree about something structural.
    """
    if n_samples < 1:
        raise InvalidInput("n_samples must be at least 1")
    t0 = time.perf_counter()
    payload = (F, measure, structure, seed, mode, fd_step)
    chunks = parallel_chunks(_mc_chunk, payload, n_samples, workers)
    d = F.output_dim
    counts = np.concatenate([c["counts"] for c in chunks])
    values = np.concatenate([c["values"] for c in chunks])
    dets = np.concatenate([c["dets"] for c in chunks])
    eigs = np.concatenate([c["eigs"] for c in chunks])
    clamped = np.concatenate([c["clamped"] for c in chunks])
    ok = np.concatenate([c["ok"] for c in chunks])
    errors = tuple(err for c in chunks for err in c["errors"])
    if len(errors) > ERROR_BUDGET * n_samples:
        first = errors[0]
        raise NumericError(
            f"{len(errors)} of {n_samples} samples failed, over the 0.1% budget; "
            f"first failure at sample {first[0]}: {first[1]}")
    good = np.where(ok)[0]
    n_ok = len(good)
    ranks = np.zeros(n_samples, dtype=np.int64)
    frac_det = 0.0
    frac_full = 0.0
    hist = {r: 0 for r in range(d + 1)}
    if n_ok:
        det_mask = det_positive_mask(dets[good], eigs[good], det_tol_scale)
        frac_det = float(np.mean(det_mask))
        ranks_ok, hist, frac_full = rank_statistics(eigs[good], rank_tol)
        ranks[good] = ranks_ok
        mean = values[good].mean(axis=0)
        se = (values[good].std(axis=0, ddof=1) / np.sqrt(n_ok)
              if n_ok > 1 else np.zeros(d))
    else:
        mean = np.zeros(d)
        se = np.zeros(d)
    return DiagnosticsReport(
        n_samples=n_samples, seed=seed, workers=workers, mode=mode,
        backend=BACKEND, output_dim=d, atom_counts=counts, values=values,
        dets=dets, eigenvalues=eigs, ranks=ranks, clamped=clamped, ok=ok,
        errors=errors, frac_det_positive=frac_det, frac_full_rank=frac_full,
        rank_histogram=hist, n_clamped=int(clamped.sum()), value_mean=mean,
        value_se=se, runtime_s=time.perf_counter() - t0)


def report_lines(report, functional_desc="", measure_desc=""):
    """Human-readable summary lines. Runtime stays here, never in CSVs."""
    lines = [
        f"samples: {report.n_samples}",
        f"seed: {report.seed}",
        f"workers: {report.workers}",
        f"backend: {report.backend}",
        f"jacobian mode: {report.mode}",
    ]
    if functional_desc:
        lines.append(f"functional: {functional_desc}")
    if measure_desc:
        lines.append(f"measure: {measure_desc}")
    lines += [
        f"mean atom count: {report.atom_counts.mean():.6g}",
        f"frac det positive: {report.frac_det_positive:.6g}",
        f"frac full rank: {report.frac_full_rank:.6g}",
        "rank histogram: " + ", ".join(
            f"{r}: {c}" for r, c in sorted(report.rank_histogram.items())),
        f"clamped samples: {report.n_clamped}",
        f"errored samples: {len(report.errors)}",
        f"runtime seconds: {report.runtime_s:.3f}",
    ]
    return lines


# ---------------------------------------------------------------------------
# Kernel density estimates

def _trapezoid(y, x):
    fn = getattr(np, "trapezoid", None)
    if fn is None:
        fn = np.trapz
    return fn(y, x)


@dataclass(frozen=True)
class KdeResult:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    raw_mass: float


def _silverman_bandwidth(values, n):
    sigma = float(values.std(ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(values, [75.0, 25.0])
    iqr = float(q75 - q25)
    spreads = [s for s in (sigma, iqr / 1.34) if s > 0.0]
    if not spreads:
        return 1e-9 * max(1.0, abs(float(values[0])))
    return 0.9 * min(spreads) * n ** (-0.2)


def _scott_bandwidth(values, n):
    sigma = float(values.std(ddof=1)) if n > 1 else 0.0
    if sigma <= 0.0:
        return 1e-9 * max(1.0, abs(float(values[0])))
    return 1.06 * sigma * n ** (-0.2)


def kde(values, bandwidth="silverman", grid=None, n_grid=2048, renormalize=True):
    """Gaussian kernel density estimate on a regular grid.

    bandwidth is "silverman", "scott", or an explicit positive float. The
    default grid extends 5 bandwidths past the data range. The density is
    renormalized to unit mass on the grid; if the raw grid mass is off by
    more than 1% the grid does not cover the data and that is an error,
    not something to paper over.
    """
    values = np.asarray(values, dtype=float).ravel()
    n = len(values)
    if n == 0:
        raise InvalidInput("kde needs at least one value")
    if not np.all(np.isfinite(values)):
        raise InvalidInput("kde values must be finite")
    if bandwidth == "silverman":
        bw = _silverman_bandwidth(values, n)
    elif bandwidth == "scott":
        bw = _scott_bandwidth(values, n)
    else:
        bw = float(bandwidth)
        if not bw > 0.0:
            raise InvalidInput("explicit bandwidth must be positive")
    if grid is None:
        lo = values.min() - 5.0 * bw
        hi = values.max() + 5.0 * bw
        grid = np.linspace(lo, hi, n_grid)
    else:
        grid = np.asarray(grid, dtype=float)
    density = np.zeros(len(grid))
    for chunk in np.array_split(values, max(1, math.ceil(n / 4096))):
        z = (grid[None, :] - chunk[:, None]) / bw
        density += np.exp(-0.5 * z * z).sum(axis=0)
    density /= n * bw * math.sqrt(2.0 * math.pi)
    raw_mass = float(_trapezoid(density, grid))
    if renormalize:
        if abs(raw_mass - 1.0) > 0.01:
            raise NumericError(
                f"kde grid captures mass {raw_mass:.6g}, more than 1% from 1; "
                "the grid does not cover the sample")
        density = density / raw_mass
    return KdeResult(grid=grid, density=density, bandwidth=bw, raw_mass=raw_mass)


@dataclass(frozen=True)
class Kde2dResult:
    grid_x: np.ndarray
    grid_y: np.ndarray
    density: np.ndarray
    bandwidths: tuple
    raw_mass: float


def kde2d(values, bandwidths=None, n_grid=128, renormalize=True):
    """Product-Gaussian KDE for bivariate samples, n^(-1/6) rate per axis."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != 2:
        raise InvalidInput("kde2d needs an (n, 2) array")
    n = len(values)
    if n == 0:
        raise InvalidInput("kde2d needs at least one value")
    if bandwidths is None:
        bws = []
        for k in range(2):
            sigma = float(values[:, k].std(ddof=1)) if n > 1 else 0.0
            if sigma <= 0.0:
                sigma = 1e-9 * max(1.0, abs(float(values[0, k])))
                bws.append(sigma)
            else:
                bws.append(sigma * n ** (-1.0 / 6.0))
        bandwidths = tuple(bws)
    bx, by = float(bandwidths[0]), float(bandwidths[1])
    gx = np.linspace(values[:, 0].min() - 5 * bx, values[:, 0].max() + 5 * bx, n_grid)
    gy = np.linspace(values[:, 1].min() - 5 * by, values[:, 1].max() + 5 * by, n_grid)
    density = np.zeros((n_grid, n_grid))
    for chunk in np.array_split(values, max(1, math.ceil(n / 512))):
        zx = (gx[None, :] - chunk[:, 0][:, None]) / bx
        zy = (gy[None, :] - chunk[:, 1][:, None]) / by
        kx = np.exp(-0.5 * zx * zx)
        ky = np.exp(-0.5 * zy * zy)
        density += np.einsum("ni,nj->ij", kx, ky)
    density /= n * bx * by * 2.0 * math.pi
    raw_mass = float(_trapezoid(_trapezoid(density, gy), gx))
    if renormalize:
        if abs(raw_mass - 1.0) > 0.01:
            raise NumericError(
                f"kde2d grid captures mass {raw_mass:.6g}, more than 1% from 1")
        density = density / raw_mass
    return Kde2dResult(grid_x=gx, grid_y=gy, density=density,
                       bandwidths=(bx, by), raw_mass=raw_mass)


# ---------------------------------------------------------------------------
# Deterministic text artifacts

def format_cell(v):
    """One CSV cell: shortest round-trip repr for floats, plain ints, text."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        return repr(f)
    s = str(v)
    if "," in s or "\n" in s:
        raise InvalidInput(f"CSV cell {s!r} contains a separator")
    return s


def rows_to_csv(header, rows):
    """Comma-separated, '.' decimal, LF line endings, header first."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    text = rows_to_csv(header, rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text


def write_report(path, lines):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def svg_line(x, y, title="", width=640, height=400):
    """A single-polyline SVG chart as a string. No plotting dependency;

    byte-for-byte deterministic for identical inputs.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise InvalidInput("svg_line needs two 1-d arrays of equal length >= 2")
    ml, mr, mt, mb = 50, 15, 30, 35
    iw, ih = width - ml - mr, height - mt - mb
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(y.min()), float(y.max())
    xs = 0.0 if x1 == x0 else iw / (x1 - x0)
    ys = 0.0 if y1 == y0 else ih / (y1 - y0)
    pts = " ".join(
        f"{ml + (xi - x0) * xs:.3f},{mt + ih - (yi - y0) * ys:.3f}"
        for xi, yi in zip(x, y))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width // 2}" y="18" text-anchor="middle" '
        f'font-family="monospace" font-size="12">{title}</text>',
        f'<line x1="{ml}" y1="{mt + ih}" x2="{ml + iw}" y2="{mt + ih}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ih}" '
        'stroke="black" stroke-width="1"/>',
        f'<text x="{ml}" y="{height - 12}" font-family="monospace" '
        f'font-size="10">{x0:.6g}</text>',
        f'<text x="{ml + iw}" y="{height - 12}" text-anchor="end" '
        f'font-family="monospace" font-size="10">{x1:.6g}</text>',
        f'<text x="{ml - 4}" y="{mt + ih}" text-anchor="end" '
        f'font-family="monospace" font-size="10">{y0:.6g}</text>',
        f'<text x="{ml - 4}" y="{mt + 10}" text-anchor="end" '
        f'font-family="monospace" font-size="10">{y1:.6g}</text>',
        f'<polyline points="{pts}" fill="none" stroke="#1f4e89" stroke-width="1.5"/>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def write_svg_line(path, x, y, title="", width=640, height=400):
    text = svg_line(x, y, title, width, height)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text
