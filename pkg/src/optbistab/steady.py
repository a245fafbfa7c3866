"""Steady-state transmission of the loaded cavity and its hysteresis.

The normalized intracavity intensity ``I`` at normalized pump detuning
``D`` solves::

    I * (1 + (D + sA / (1 + S*I))**2) = 1

Clearing the denominator ``(1 + S*I)**2`` gives a cubic in ``I`` whose real
roots in [0, 1] are the steady states.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dynamics import fixed_point_arrays, jacobian_arrays
from .params import ModelParams, PhysicalParams

IMAG_TOL = 1e-9
CLAMP_TOL = 1e-9
MARGINAL_RATE = 1e-9  # in units of kappa
DEFAULT_MAX_STEP = 0.1
POLISH_LIMIT = 1e-6


class DegenerateCubicError(ArithmeticError):
    """The cubic's leading coefficient underflowed or its scaling overflowed."""


class Direction(str, enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"


@dataclass(frozen=True)
class Root:
    intensity_norm: float
    stable: bool
    saddle: bool = False


@dataclass(frozen=True)
class SteadySolution:
    detuning_norm: float
    roots: tuple[Root, ...]

    @property
    def intensities(self) -> np.ndarray:
        return np.array([r.intensity_norm for r in self.roots])

    def __len__(self) -> int:
        return len(self.roots)


@dataclass(frozen=True)
class BistableRegion:
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ScanTrace:
    """One detuning sweep. ``folds`` holds indices where the root count changes."""

    direction: Direction
    detuning_norm: np.ndarray
    intensity_norm: np.ndarray
    folds: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", Direction(self.direction))
        d = np.asarray(self.detuning_norm, dtype=float)
        i = np.asarray(self.intensity_norm, dtype=float)
        if d.ndim != 1 or d.shape != i.shape or d.size == 0:
            raise ValueError("detuning and intensity must be equal-length 1-D arrays")
        _check_monotone(d, self.direction)
        object.__setattr__(self, "detuning_norm", d)
        object.__setattr__(self, "intensity_norm", i)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.detuning_norm.tolist(), self.intensity_norm.tolist()))

    def __len__(self) -> int:
        return self.detuning_norm.size


def _check_monotone(grid: np.ndarray, direction: Direction) -> None:
    steps = np.diff(grid)
    ok = np.all(steps > 0) if direction is Direction.INCREASING else np.all(steps < 0)
    if not ok:
        raise ValueError(f"detuning grid is not strictly {direction.value}")


def empty_cavity_intensity(detuning_norm):
    """Lorentzian transmission of the empty cavity, 1/(1 + D^2)."""
    d = np.asarray(detuning_norm, dtype=float)
    out = 1.0 / (1.0 + d * d)
    return float(out) if out.ndim == 0 else out


def effective_detuning(intensity_norm, detuning_norm, m: ModelParams):
    return detuning_norm + m.signed_a / (1.0 + m.s_param * np.asarray(intensity_norm))


def resonance_residual(intensity_norm, detuning_norm, m: ModelParams):
    """``I*(1 + D_eff^2) - 1``; zero exactly on a steady state."""
    d_eff = effective_detuning(intensity_norm, detuning_norm, m)
    return np.asarray(intensity_norm) * (1.0 + d_eff * d_eff) - 1.0


def cubic_coefficients(detuning_norm, m: ModelParams) -> np.ndarray:
    """Coefficients (c3, c2, c1, c0) along the last axis."""
    d = np.asarray(detuning_norm, dtype=float)
    s = m.s_param
    b = d + m.signed_a
    c3 = s * s * (1.0 + d * d)
    c2 = 2.0 * s + 2.0 * s * d * b - s * s
    c1 = 1.0 + b * b - 2.0 * s
    c0 = -np.ones_like(d)
    return np.stack([c3, c2, c1, c0], axis=-1)


def _polish(roots: np.ndarray, coeffs: np.ndarray, iterations: int = 4) -> np.ndarray:
    """Newton refinement. A candidate that would move by more than
    POLISH_LIMIT (a near-double root, where Newton is unreliable) keeps its
    eigenvalue estimate."""
    c3, c2, c1, c0 = (coeffs[..., k, None] for k in range(4))
    x = roots.copy()
    for _ in range(iterations):
        val = ((c3 * x + c2) * x + c1) * x + c0
        der = (3.0 * c3 * x + 2.0 * c2) * x + c1
        safe = np.abs(der) > 1e-300
        step = np.where(safe, val / np.where(safe, der, 1.0), 0.0)
        x = np.where(np.isfinite(step), x - step, x)
    return np.where(np.abs(x - roots) <= POLISH_LIMIT, x, roots)


def _real_roots_padded(grid: np.ndarray, m: ModelParams) -> np.ndarray:
    """Real roots in [0, 1], shape (len(grid), 3), ascending, NaN-padded."""
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    out = np.full((grid.size, 3), np.nan)
    if m.s_param == 0.0:
        out[:, 0] = 1.0 / (1.0 + (grid + m.signed_a) ** 2)
        return out

    coeffs = cubic_coefficients(grid, m)
    lead = coeffs[:, 0]
    if np.any(lead == 0.0) or not np.all(np.isfinite(coeffs)):
        raise DegenerateCubicError(f"leading coefficient underflow or overflow for S = {m.s_param}")

    # Eigenvalues of the reversed polynomial in u = 1/I, whose coefficients
    # stay bounded as S -> 0 (the monic cubic in I blows up like 1/S^2).
    # Since c0 = -1 it is already monic up to sign: u^3 - c1 u^2 - c2 u - c3.
    companion = np.zeros((grid.size, 3, 3))
    companion[:, 0, 0] = coeffs[:, 2]
    companion[:, 0, 1] = coeffs[:, 1]
    companion[:, 0, 2] = coeffs[:, 0]
    companion[:, 1, 0] = 1.0
    companion[:, 2, 1] = 1.0
    eig = np.linalg.eigvals(companion)

    u = np.where(np.abs(eig.imag) < IMAG_TOL * np.maximum(np.abs(eig.real), 1.0), eig.real, np.nan)
    # physical roots have u >= 1; the spurious pair sits near u = -S
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = np.where(u > 0.5, 1.0 / u, np.nan)
    cand = _polish(cand, coeffs)
    inside = (cand >= -CLAMP_TOL) & (cand <= 1.0 + CLAMP_TOL)
    cand = np.where(inside, np.clip(cand, 0.0, 1.0), np.nan)
    return np.sort(cand, axis=1)  # NaN sorts last


def _real_roots_batch(grid: np.ndarray, m: ModelParams) -> list[np.ndarray]:
    """Sorted real roots in [0, 1] for each detuning in ``grid``."""
    padded = _real_roots_padded(grid, m)
    return [row[~np.isnan(row)] for row in padded]


def root_counts(grid, m: ModelParams) -> np.ndarray:
    return np.sum(~np.isnan(_real_roots_padded(grid, m)), axis=1)


def _classify_batch(intensity, detuning, m: ModelParams, p: PhysicalParams):
    """(stable, saddle) flags for fixed points given as flat arrays."""
    intensity = np.asarray(intensity, dtype=float)
    if intensity.size == 0:
        return np.zeros(0, bool), np.zeros(0, bool)
    x, y, n = fixed_point_arrays(intensity, detuning, m)
    # the steady curve is defined by the detuned saturation, whatever the
    # dynamics toggle says
    jac = jacobian_arrays(x, y, n, detuning, m.signed_a, m.s_param,
                          0.5 * p.kappa, 1.0 / p.tau)
    eig = np.linalg.eigvals(jac)
    tol = MARGINAL_RATE * p.kappa
    stable = np.all(eig.real < -tol, axis=-1)
    saddle = np.any((np.abs(eig.imag) <= tol) & (eig.real > tol), axis=-1)
    return stable, saddle


def classify_stability(root: float, detuning_norm: float, m: ModelParams,
                       p: PhysicalParams) -> bool:
    """True iff every eigenvalue of the linearized dynamics has Re < 0.

    Eigenvalues with ``|Re| < 1e-9 * kappa`` count as marginal, i.e. unstable.
    """
    res = float(resonance_residual(root, detuning_norm, m))
    if abs(res) >= 1e-9:
        raise ValueError(f"intensity {root} is not a steady state (residual {res:.3g})")
    stable, _ = _classify_batch(np.array([root]), np.array([detuning_norm]), m, p)
    return bool(stable[0])


def steady_roots_batch(grid, m: ModelParams,
                       p: PhysicalParams | None = None) -> list[SteadySolution]:
    p = p or PhysicalParams()
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    roots = _real_roots_batch(grid, m)
    flat_i = np.concatenate(roots)
    flat_d = np.repeat(grid, [r.size for r in roots])
    stable, saddle = _classify_batch(flat_i, flat_d, m, p)
    out = []
    k = 0
    for d, r in zip(grid, roots):
        items = tuple(Root(float(r[j]), bool(stable[k + j]), bool(saddle[k + j]))
                      for j in range(r.size))
        out.append(SteadySolution(float(d), items))
        k += r.size
    return out


def steady_roots(detuning_norm: float, m: ModelParams,
                 p: PhysicalParams | None = None) -> SteadySolution:
    """All steady states at one detuning, with stability flags.

    ``p`` only sets the ratio of cavity and atomic rates used for the
    stability analysis; it defaults to the standard physical parameters.
    """
    return steady_roots_batch([detuning_norm], m, p)[0]


def bistable_region(m: ModelParams, search_range: tuple[float, float] = (-100.0, 100.0),
                    resolution: float = 5e-3, tol: float = 1e-6) -> BistableRegion | None:
    """Largest detuning interval with three steady states, or None.

    Three-root detunings are first located on a grid of spacing
    ``resolution``; each endpoint is then bisected to ``tol``. Regions
    narrower than the grid spacing may be missed.
    """
    lo, hi = map(float, search_range)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"invalid search range {search_range}")
    n = max(int(np.ceil((hi - lo) / resolution)) + 1, 3)
    grid = np.linspace(lo, hi, n)
    triple = root_counts(grid, m) == 3
    if not triple.any():
        return None

    # longest run of consecutive three-root samples
    edges = np.diff(np.concatenate([[0], triple.astype(int), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1) - 1
    best = int(np.argmax(stops - starts))
    i0, i1 = starts[best], stops[best]

    def is_triple(d: float) -> bool:
        return not np.isnan(_real_roots_padded(np.array([d]), m)[0, 2])

    def bisect(outside: float, inside: float) -> float:
        while abs(inside - outside) > tol:
            mid = 0.5 * (inside + outside)
            if is_triple(mid):
                inside = mid
            else:
                outside = mid
        return 0.5 * (inside + outside)

    lower = grid[i0] if i0 == 0 else bisect(grid[i0 - 1], grid[i0])
    upper = grid[i1] if i1 == n - 1 else bisect(grid[i1 + 1], grid[i1])
    return BistableRegion(float(lower), float(upper))


def _choose(values, stable, saddle, previous: float | None) -> int:
    """Index of the realized root among ``values`` (ascending)."""
    n = len(values)
    if n == 1:
        return 0
    if previous is None:
        pool = ([k for k in range(n) if stable[k]] or [k for k in range(n) if not saddle[k]]
                or list(range(n)))
        return min(pool, key=lambda k: values[k])
    # Saddle branches are never realized. Oscillatory (Hopf-unstable)
    # branches are kept: the state circles them rather than leaving.
    pool = [k for k in range(n) if not saddle[k]] or list(range(n))
    return min(pool, key=lambda k: abs(values[k] - previous))


def _roots_with_flags(grid: np.ndarray, m: ModelParams, p: PhysicalParams):
    """Padded roots, counts and (stable, saddle) flags; flags are only
    evaluated where several roots coexist, since a lone root is always taken."""
    roots = _real_roots_padded(grid, m)
    counts = np.sum(~np.isnan(roots), axis=1)
    stable = np.ones(roots.shape, bool)
    saddle = np.zeros(roots.shape, bool)
    multi = np.flatnonzero(counts > 1)
    if multi.size:
        sub = roots[multi]
        ok = ~np.isnan(sub)
        d = np.broadcast_to(grid[multi, None], sub.shape)
        st, sd = _classify_batch(sub[ok], d[ok], m, p)
        stable_sub = np.zeros(sub.shape, bool)
        saddle_sub = np.zeros(sub.shape, bool)
        stable_sub[ok] = st
        saddle_sub[ok] = sd
        stable[multi] = stable_sub
        saddle[multi] = saddle_sub
    return roots, counts, stable, saddle


def _follow(rows, counts, stable, saddle, order) -> np.ndarray:
    """Branch-following pass over list-converted root data in ``order``."""
    values = np.empty(len(rows))
    previous = None
    for k in order:
        c = counts[k]
        if c == 1:
            previous = rows[k][0]
        else:
            row = rows[k][:c]
            previous = row[_choose(row, stable[k][:c], saddle[k][:c], previous)]
        values[k] = previous
    return values


def _scan_values(grid: np.ndarray, m: ModelParams, p: PhysicalParams):
    roots, counts, stable, saddle = _roots_with_flags(grid, m, p)
    values = _follow(roots.tolist(), counts.tolist(), stable.tolist(), saddle.tolist(),
                     range(grid.size))
    return values, counts


def _fold_indices(counts: np.ndarray) -> tuple[int, ...]:
    return tuple(int(k) for k in np.flatnonzero(np.diff(counts) != 0) + 1)


def scan_pair_values(up_grid: np.ndarray, m: ModelParams, p: PhysicalParams | None = None):
    """Up- and down-scan intensities on one ascending grid (both indexed
    like ``up_grid``) plus the fold indices; roots are solved once."""
    roots, counts, stable, saddle = _roots_with_flags(up_grid, m, p or PhysicalParams())
    n = up_grid.size
    data = (roots.tolist(), counts.tolist(), stable.tolist(), saddle.tolist())
    up = _follow(*data, range(n))
    down = _follow(*data, range(n - 1, -1, -1))
    return up, down, _fold_indices(counts)


def hysteresis_scan(grid, direction: Direction | str, m: ModelParams,
                    p: PhysicalParams | None = None,
                    max_step: float | None = DEFAULT_MAX_STEP) -> ScanTrace:
    """Follow the steady state closest to the previous one along ``grid``.

    The first sample takes the unique root, or the lowest-intensity stable
    root when several coexist. When the followed branch ends at a fold the
    trace jumps to the nearest surviving branch.
    """
    direction = Direction(direction)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-D sequence")
    _check_monotone(grid, direction)
    if max_step is not None and grid.size > 1:
        step = np.max(np.abs(np.diff(grid)))
        if step > max_step * (1 + 1e-9):
            raise ValueError(f"grid step {step:.4g} exceeds {max_step} (folds unresolved)")

    values, counts = _scan_values(grid, m, p or PhysicalParams())
    return ScanTrace(direction, grid, values, _fold_indices(counts))


def scan_pair(grid, m: ModelParams, p: PhysicalParams | None = None,
              max_step: float | None = DEFAULT_MAX_STEP) -> tuple[ScanTrace, ScanTrace]:
    """Up- and down-scans over the same detunings (``grid`` in any order)."""
    up_grid = np.sort(np.asarray(grid, dtype=float))
    up = hysteresis_scan(up_grid, Direction.INCREASING, m, p, max_step)
    down = hysteresis_scan(up_grid[::-1], Direction.DECREASING, m, p, max_step)
    return up, down


def _lead_in(scan_grid: np.ndarray, m: ModelParams) -> np.ndarray:
    """Detunings to prepend so a scan starting inside the bistable region
    enters it from outside, as a scan from far off resonance would."""
    first = scan_grid[0]
    step = abs(scan_grid[1] - scan_grid[0]) if scan_grid.size > 1 else DEFAULT_MAX_STEP
    step = min(step, DEFAULT_MAX_STEP)
    if root_counts([first], m)[0] == 1:
        return np.empty(0)
    half = 2.0 * (abs(m.a_param) + abs(first)) + 10.0
    region = bistable_region(m, (first - half, first + half))
    if region is None:
        return np.empty(0)
    increasing = scan_grid.size < 2 or scan_grid[1] > scan_grid[0]
    edge = region.lower - step if increasing else region.upper + step
    n = int(np.ceil(abs(first - edge) / step)) + 1
    pts = first - np.sign(first - edge) * step * np.arange(n, 0, -1)
    return pts


def tilt_map(a_values, grid, s_param: float, direction: Direction | str = Direction.DECREASING,
             shift_sign="figure_convention", p: PhysicalParams | None = None,
             lead_in: bool = True) -> np.ndarray:
    """Raster of scan intensities, one row per interaction strength.

    Rows follow ``a_values``; columns follow ``grid`` sorted ascending,
    regardless of the scan direction used to fill them. With ``lead_in``
    a scan whose first detuning lies inside the bistable region is started
    outside it, so the raster shows the branch a real sweep would follow.
    """
    direction = Direction(direction)
    up_grid = np.sort(np.asarray(grid, dtype=float))
    scan_grid = up_grid if direction is Direction.INCREASING else up_grid[::-1]
    raster = np.empty((len(a_values), up_grid.size))
    for row, a in enumerate(a_values):
        m = ModelParams(float(a), s_param, shift_sign)
        extra = _lead_in(scan_grid, m) if lead_in else np.empty(0)
        trace = hysteresis_scan(np.concatenate([extra, scan_grid]), direction, m, p)
        vals = trace.intensity_norm[extra.size:]
        raster[row] = vals if direction is Direction.INCREASING else vals[::-1]
    return raster
