"""Brute-force and sampling ground truth.

Grid lower-level solving, the optimistic value function, local-optimality
verification, sampled normal cones, and calmness / Lipschitz-like modulus
estimation.  Verdicts here are evidence at declared resolutions, not proofs;
every exact formula in the toolkit is tested against this module.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyGridError, TooFewSamplesError
from .expr import evaluate
from .model import BilevelProblem, BoxSet, Candidate, Polyhedron

# Fixed constants of the sampling-oracle contract; documented here once so
# acceptance evidence is reproducible.
RATIO_TOL = 1e-4
SHRINK_RADII = (1e-2, 1e-3, 1e-4)
ANGULAR_RESOLUTION_DEG = 2.0
DEFAULT_SEED = 20240817


@dataclass(frozen=True)
class GridSpec:
    """Per-dimension bounds and resolution for brute-force sweeps."""

    bounds: tuple  # ((lo, hi), ...) all finite
    resolution: int = 41
    refine_factor: int = 10

    def __post_init__(self):
        assert self.resolution >= 2
        for lo, hi in self.bounds:
            assert math.isfinite(lo) and math.isfinite(hi) and lo <= hi

    def axes(self):
        return [np.linspace(lo, hi, self.resolution) for lo, hi in self.bounds]

    def step(self):
        return max(
            (hi - lo) / (self.resolution - 1) for lo, hi in self.bounds
        )


def default_grid_for(problem: BilevelProblem, center, radius=2.0, resolution=41):
    bounds = tuple((float(c) - radius, float(c) + radius) for c in center)
    return GridSpec(bounds=bounds, resolution=resolution)


def _k_membership(problem, tol=1e-9):
    if isinstance(problem.K, BoxSet):
        box = problem.K
        return lambda y: box.contains(y, tol)
    poly = problem.K
    return lambda y: poly.margin(tuple(float(v) for v in y)) <= tol


def solve_lower_grid(problem: BilevelProblem, x, grid: GridSpec, tol=1e-6):
    """Approximate lower-level solution set at x by grid sweep + refinement.

    Deterministic: candidate minimizers are kept in lexicographic order.
    """
    member = _k_membership(problem)
    fexpr = problem.f.components[0]
    xs = tuple(float(v) for v in x)

    def sweep(axes):
        best = math.inf
        pts = []
        for y in itertools.product(*axes):
            if not member(y):
                continue
            val = evaluate(fexpr, xs + y)
            pts.append((y, val))
            best = min(best, val)
        return best, pts

    best, pts = sweep(grid.axes())
    if not pts:
        raise EmptyGridError("grid does not intersect K")
    minimizers = [y for y, v in pts if v <= best + tol]

    # One refinement pass around each coarse minimizer.
    cell = grid.step()
    refined_best = best
    refined_pts = list(pts)
    for y0 in minimizers:
        axes = [
            np.linspace(yi - cell, yi + cell, grid.refine_factor * 2 + 1)
            for yi in y0
        ]
        b, p = sweep(axes)
        refined_best = min(refined_best, b)
        refined_pts.extend(p)

    sols = sorted({y for y, v in refined_pts if v <= refined_best + tol})
    return [tuple(y) for y in sols]


def phi0(problem: BilevelProblem, x, grid: GridSpec, tol=1e-6):
    """Optimistic value: min of F(x, .) over the approximate solution set."""
    sols = solve_lower_grid(problem, x, grid, tol)
    Fexpr = problem.F.components[0]
    xs = tuple(float(v) for v in x)
    return min(evaluate(Fexpr, xs + y) for y in sols)


@dataclass
class LocalOptimalityVerdict:
    locally_optimal: bool
    value_at_candidate: float
    consistency_gap: float  # |phi0(xbar) - F(xbar, ybar)|
    worst_violator: tuple | None
    worst_violation: float


def verify_optimistic_local(
    problem: BilevelProblem, cand: Candidate, radius, grid: GridSpec,
    x_resolution=21, tol=1e-6,
):
    """Check the optimistic-optimality definition over a grid neighborhood."""
    xs = tuple(float(v) for v in cand.x)
    ys = tuple(float(v) for v in cand.y)
    Fexpr = problem.F.components[0]
    f_val = evaluate(Fexpr, xs + ys)
    base = phi0(problem, xs, grid, tol)
    gap = abs(base - f_val)

    axes = [np.linspace(c - radius, c + radius, x_resolution) for c in xs]
    worst = None
    worst_gap = 0.0
    for x in itertools.product(*axes):
        if not problem.omega.contains(x, 1e-9):
            continue
        if np.linalg.norm(np.array(x) - np.array(xs)) > radius + 1e-12:
            continue
        try:
            val = phi0(problem, x, grid, tol)
        except EmptyGridError:
            continue
        viol = base - val  # positive when x beats the candidate
        if viol > worst_gap:
            worst_gap = viol
            worst = x
    ok = gap <= tol and worst_gap <= tol
    return LocalOptimalityVerdict(ok, f_val, gap, worst, worst_gap)


# ---------------------------------------------------------------------------
# Sampled normal cones (definition-level oracles)

def _unit_directions(dim, count, rng):
    v = rng.normal(size=(count, dim))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    return v / np.maximum(norms, 1e-300)


def _sample_members_near(membership, point, radius, rng, want, batch=4096,
                         max_batches=50, project=None):
    """Rejection-sample set members in the ball of the given radius.

    An optional project hook maps proposals onto the set before the
    membership filter; needed when the set is thin or measure-zero, where
    plain rejection sampling would starve.  Projection onto a convex set
    containing the base point never increases the distance to it.
    """
    point = np.asarray(point, dtype=float)
    dim = point.size
    out = []
    for _ in range(max_batches):
        raw = rng.normal(size=(batch, dim))
        raw /= np.maximum(np.linalg.norm(raw, axis=1, keepdims=True), 1e-300)
        radii = radius * rng.uniform(size=(batch, 1)) ** (1.0 / dim)
        pts = point + raw * radii
        if project is not None:
            pts = project(pts)
            pts = pts[np.linalg.norm(pts - point, axis=1) <= radius]
        mask = membership(pts)
        out.extend(pts[mask])
        if len(out) >= want:
            break
    if len(out) < max(8, want // 20):
        raise TooFewSamplesError(
            f"only {len(out)} set members within radius {radius}"
        )
    return np.array(out[:want])


def sample_frechet_normal_cone(
    membership, point, directions=200, samples_per_radius=2000,
    radii=SHRINK_RADII, ratio_tol=RATIO_TOL, seed=DEFAULT_SEED, rng=None,
    project=None, min_step=1e-14,
):
    """Classify sampled unit directions by the regular-normal limsup test.

    membership maps an (N, d) array to a boolean mask.  A direction is IN
    when its worst inner-product ratio against set members is below
    ratio_tol at every shrinking radius.  Displacements shorter than
    min_step are skipped: below that scale the ratio is dominated by the
    float slack of the membership test, not by geometry.
    """
    rng = rng or np.random.default_rng(seed)
    point = np.asarray(point, dtype=float)
    dirs = (
        directions
        if isinstance(directions, np.ndarray)
        else _unit_directions(point.size, directions, rng)
    )
    worst = np.full(len(dirs), -np.inf)
    for radius in radii:
        members = _sample_members_near(
            membership, point, radius, rng, samples_per_radius, project=project
        )
        delta = members - point
        norms = np.linalg.norm(delta, axis=1)
        keep = norms > min_step
        if not keep.any():
            continue
        ratios = (dirs @ delta[keep].T) / norms[keep]
        worst = np.maximum(worst, ratios.max(axis=1))
    flags = worst <= ratio_tol
    return [(tuple(d), bool(f)) for d, f in zip(dirs, flags)]


def sample_limiting_normal_cone(
    membership, point, directions=200, base_points=30,
    samples_per_radius=1500, radii=SHRINK_RADII, ratio_tol=RATIO_TOL,
    seed=DEFAULT_SEED, project=None,
):
    """Union of sampled regular cones at set points near the base point."""
    rng = np.random.default_rng(seed)
    point = np.asarray(point, dtype=float)
    dirs = _unit_directions(point.size, directions, rng)
    bases = [point]
    for radius in radii[:2]:
        near = _sample_members_near(
            membership, point, radius, rng, base_points, project=project
        )
        bases.extend(near)
    in_flags = np.zeros(len(dirs), dtype=bool)
    for base in bases:
        res = sample_frechet_normal_cone(
            membership, base, directions=dirs,
            samples_per_radius=samples_per_radius, radii=radii,
            ratio_tol=ratio_tol, rng=rng, project=project,
        )
        in_flags |= np.array([f for _, f in res])
    return [(tuple(d), bool(f)) for d, f in zip(dirs, in_flags)]


def sample_frechet_coderivative(h, point, ystar, directions=64, steps=(1e-5, 1e-6),
                                seed=DEFAULT_SEED):
    """Sampling estimate of the coderivative of a smooth map applied to ystar.

    Fits <x*, d> to sampled directional slopes of <ystar, h> and returns the
    least-squares x*; independent of the symbolic differentiation path.
    """
    rng = np.random.default_rng(seed)
    d = h.n + h.m
    dirs = _unit_directions(d, directions, rng)
    p = np.asarray([float(v) for v in point])
    ystar = np.asarray([float(v) for v in ystar])

    def scal(q):
        vals = h.value(tuple(q))
        if h.is_scalar:
            vals = [vals]
        return float(np.dot(ystar, [float(v) for v in vals]))

    slopes = np.zeros(len(dirs))
    for i, dvec in enumerate(dirs):
        est = []
        for t in steps:
            est.append((scal(p + t * dvec) - scal(p - t * dvec)) / (2 * t))
        slopes[i] = est[-1]
    sol, *_ = np.linalg.lstsq(dirs, slopes, rcond=None)
    return tuple(float(v) for v in sol)


# ---------------------------------------------------------------------------
# Set-valued map moduli

def estimate_calmness(map_fn, xbar, radii=(0.5, 0.25, 0.1), samples=40,
                      seed=DEFAULT_SEED):
    """One-sided modulus: sup dist(S(x), S(xbar)) / |x - xbar| near xbar."""
    rng = np.random.default_rng(seed)
    xbar = np.asarray([float(v) for v in xbar])
    base = [np.asarray(y, dtype=float) for y in map_fn(tuple(xbar))]
    if not base:
        raise EmptyGridError("S(xbar) is empty")
    est = 0.0
    for radius in radii:
        for _ in range(samples):
            x = xbar + radius * rng.uniform(-1.0, 1.0, size=xbar.size)
            dx = np.linalg.norm(x - xbar)
            if dx < 1e-12:
                continue
            vals = [np.asarray(y, dtype=float) for y in map_fn(tuple(x))]
            if not vals:
                continue
            d = max(min(np.linalg.norm(v - b) for b in base) for v in vals)
            est = max(est, d / dx)
    return est


def estimate_lipschitz_like(map_fn, xbar, radii=(0.5, 0.25, 0.1), samples=40,
                            seed=DEFAULT_SEED):
    """Two-sided variant of estimate_calmness, sampling both base points."""
    rng = np.random.default_rng(seed)
    xbar = np.asarray([float(v) for v in xbar])
    est = 0.0
    for radius in radii:
        for _ in range(samples):
            x = xbar + radius * rng.uniform(-1.0, 1.0, size=xbar.size)
            u = xbar + radius * rng.uniform(-1.0, 1.0, size=xbar.size)
            dxu = np.linalg.norm(x - u)
            if dxu < 1e-12:
                continue
            sx = [np.asarray(y, dtype=float) for y in map_fn(tuple(x))]
            su = [np.asarray(y, dtype=float) for y in map_fn(tuple(u))]
            if not sx or not su:
                continue
            d = max(min(np.linalg.norm(v - b) for b in su) for v in sx)
            est = max(est, d / dxu)
    return est
