"""Integration over levels against ``a -> Gamma^a`` and its box-increment
version in two dimensions, with the ``||.||_k`` norms, the metric ``[.]``
and the density ``U`` of the energy measure pushed forward by ``u``.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import montecarlo
from .functions import FunctionDescriptor, custom
from .nakao import (MafBuilder, composed_builder, gamma, gamma_levels, level_accumulate,
                    _eval_index)
from .path_calculus import GridMismatch
from .process_models import ProcessSpec, SamplePath, simulate_path


class UnboundedIntegrand(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LevelGrid:
    levels: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.levels, dtype=float)
        if z.ndim != 1 or len(z) < 2:
            raise ValueError("a level grid needs at least two levels")
        if not np.all(np.isfinite(z)) or np.any(np.diff(z) <= 0):
            raise ValueError("levels must be finite and strictly increasing")
        object.__setattr__(self, "levels", z)

    @property
    def n_cells(self) -> int:
        return len(self.levels) - 1

    def __len__(self):
        return len(self.levels)


def default_level_grid(path: SamplePath, u: FunctionDescriptor, n_cells: int = 2 ** 8) -> LevelGrid:
    """``n_cells`` equal cells covering ``[min u(X) - h, max u(X) + h]``, ``h`` one cell."""
    if n_cells < 3:
        raise ValueError("n_cells must be at least 3")
    uv = u.value(path.values)
    lo, hi = float(np.min(uv)), float(np.max(uv))
    h = (hi - lo) / (n_cells - 2) if hi > lo else 1.0
    return LevelGrid(np.linspace(lo - h, lo - h + n_cells * h, n_cells + 1))


@dataclass(frozen=True, eq=False)
class ElementaryFunction:
    """``sum_i f_i 1_{(z_i, z_{i+1}]}``."""

    grid: LevelGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.grid.n_cells,):
            raise ValueError(f"need {self.grid.n_cells} coefficients, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def evaluate(self, z):
        z = np.asarray(z, dtype=float)
        pos = np.searchsorted(self.grid.levels, z, side="left") - 1
        inside = (pos >= 0) & (pos < self.grid.n_cells)
        return np.where(inside, self.coeffs[np.clip(pos, 0, self.grid.n_cells - 1)], 0.0)

    def refine(self, levels) -> ElementaryFunction:
        """Same function on a finer grid (``levels`` must contain the old ones)."""
        new = np.union1d(np.asarray(levels, dtype=float), self.grid.levels)
        return ElementaryFunction(LevelGrid(new), self.evaluate(new[1:]))

    def as_descriptor(self) -> FunctionDescriptor:
        return custom(self.evaluate, lambda z: np.zeros_like(np.asarray(z, dtype=float)),
                      label="elementary")


def _time_index(path: SamplePath, t: float) -> int:
    k = int(round(t / path.dt))
    if not 0 <= k <= path.n or abs(k * path.dt - t) > 1e-9 * max(path.dt, abs(t)):
        raise GridMismatch(f"t={t} is not a grid time")
    return k


def _grid_with(path, eval_grid, k):
    idx = _eval_index(path, eval_grid)
    if k not in set(idx.tolist()):
        raise GridMismatch(f"grid index {k} is not on the eval grid")
    return idx


def integrate_levels_elementary(f: ElementaryFunction, path: SamplePath, u: FunctionDescriptor,
                                t: float, eval_grid=None) -> float:
    """``sum_i f_i (Gamma^{z_{i+1}}_t - Gamma^{z_i}_t)``; all levels share one pass."""
    k = _time_index(path, t)
    if eval_grid is None:
        eval_grid = np.array(sorted({0, k}))
    idx = _grid_with(path, eval_grid, k)
    g = gamma_levels(path, u, f.grid.levels, idx)[:, int(np.searchsorted(idx, k))]
    return float(np.dot(f.coeffs, np.diff(g)))


def _check_bounded(f: FunctionDescriptor, path: SamplePath, u: FunctionDescriptor):
    z = np.concatenate([u.value(path.values), u.value(path.left_limits())])
    fz = f.value(z)
    if not np.all(np.isfinite(fz)):
        raise UnboundedIntegrand(f"{f} is unbounded on the path's u-range")


def integrate_levels(f: FunctionDescriptor, path: SamplePath, u: FunctionDescriptor, t: float,
                     method: str = "prefix") -> float:
    """``int f(z) d_z Gamma^z_t = Gamma_t((f o u) * M^{u,c})``."""
    _check_bounded(f, path, u)
    k = _time_index(path, t)
    return gamma(composed_builder(f, u), path, np.array(sorted({0, k})), method).at(k)


# -- U density, norms and metric --------------------------------------------

@dataclass(frozen=True)
class UDensity:
    """``U`` on bins (``edges``) with a standard error, or in closed form."""

    edges: np.ndarray | None
    values: np.ndarray | None
    se: np.ndarray | None
    closed_form: Callable | None = None

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.closed_form is not None:
            return self.closed_form(z)
        pos = np.searchsorted(self.edges, z, side="right") - 1
        inside = (pos >= 0) & (pos < len(self.values))
        return np.where(inside, self.values[np.clip(pos, 0, len(self.values) - 1)], 0.0)

    def band(self, z, width: float = 2.0):
        if self.closed_form is not None:
            v = self(z)
            return v, v
        z = np.asarray(z, dtype=float)
        pos = np.clip(np.searchsorted(self.edges, z, side="right") - 1, 0, len(self.values) - 1)
        v = self(z)
        return v - width * self.se[pos], v + width * self.se[pos]


class _OccupationSample:
    def __init__(self, spec, u, t, dt, window, edges):
        self.spec, self.u, self.t, self.dt, self.window, self.edges = spec, u, t, dt, window, edges

    def __call__(self, seed):
        rng = np.random.default_rng([seed, 2])
        x0 = rng.uniform(*self.window)
        path = simulate_path(self.spec, self.t, self.dt, seed, start=x0)
        x = path.values[:-1]
        w = self.u.deriv(x) ** 2 * self.spec.sigma2 * self.dt
        h, _ = np.histogram(self.u.value(x), bins=self.edges, weights=w)
        return h


def occupation_density_mc(spec: ProcessSpec, u: FunctionDescriptor, edges, t: float = 1.0,
                          dt: float = 1e-3, n_paths: int = 400, seed: int = 0,
                          window: tuple[float, float] = (-6.0, 6.0), workers: int = 1) -> UDensity:
    """Binned Monte Carlo estimate of ``U`` from occupation times.

    Lebesgue measure is invariant for the catalog models, so starting
    uniformly on ``window`` and rescaling by its length estimates the Revuz
    measure of ``<M^{u,c}>`` on ``u^{-1}(bin)`` (exact if that set stays
    well inside the window).
    """
    edges = np.asarray(edges, dtype=float)
    sims = montecarlo.mc_map(_OccupationSample(spec, u, t, dt, window, edges),
                             montecarlo.path_seeds(seed, n_paths), workers)
    h = np.asarray(sims) * (window[1] - window[0]) / t / np.diff(edges)
    mean = h.mean(axis=0)
    se = h.std(axis=0, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.full_like(mean, np.inf)
    return UDensity(edges, mean, se)


def u_density(spec: ProcessSpec, u: FunctionDescriptor, edges=None, **mc_kwargs) -> UDensity:
    """``U`` with ``int f(u(x)) mu_<M^{u,c}>(dx) = int f(z) U(z) dz``.

    Closed form for the identity (and whenever ``sigma2 = 0``); otherwise
    the binned occupation estimate.
    """
    s2 = float(spec.sigma2)
    if s2 == 0.0:
        return UDensity(None, None, None, lambda z: np.zeros_like(np.asarray(z, dtype=float)))
    if u.is_identity:
        return UDensity(None, None, None, lambda z: np.full_like(np.asarray(z, dtype=float), s2))
    if edges is None:
        lo, hi = u.range_bounds
        lo, hi = max(lo, -5.0), min(hi, 5.0)
        edges = np.linspace(lo, hi, 41)
    return occupation_density_mc(spec, u, edges, **mc_kwargs)


def norm_k(f: FunctionDescriptor, spec: ProcessSpec, u: FunctionDescriptor, k: float,
           density: UDensity | None = None) -> float:
    """``||f||_k = (int_{-k}^{k} f(z)^2 U(z) dz)^{1/2}``; ``inf`` if divergent."""
    if k < 1:
        raise ValueError("k must be >= 1")
    dens = density or u_density(spec, u)
    if dens.closed_form is None:
        e = dens.edges
        mid = 0.5 * (e[1:] + e[:-1])
        keep = (e[:-1] >= -k) & (e[1:] <= k)
        fv = f.value(mid[keep])
        v = float(np.sum(fv ** 2 * dens.values[keep] * np.diff(e)[keep]))
        return math.sqrt(max(v, 0.0)) if np.isfinite(v) else math.inf

    def integrand(z):
        return float(f.value(z)) ** 2 * float(dens(z))

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            v, err = integrate.quad(integrand, -k, k, limit=200)
        except (integrate.IntegrationWarning, ZeroDivisionError, OverflowError):
            return math.inf
    if not math.isfinite(v):
        return math.inf
    return math.sqrt(max(v, 0.0))


def difference(f: FunctionDescriptor, g: FunctionDescriptor) -> FunctionDescriptor:
    return custom(lambda z: f.value(z) - g.value(z), label=f"{f}-{g}")


def metric_bracket(f: FunctionDescriptor, g: FunctionDescriptor | None, spec: ProcessSpec,
                   u: FunctionDescriptor, k_max: int = 20, density: UDensity | None = None) -> float:
    """``[f - g] = sum_{k <= k_max} 2^-k (1 ^ ||f - g||_k)``; the tail is below ``2^-k_max``."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    h = f if g is None else difference(f, g)
    dens = density or u_density(spec, u)
    return math.fsum(2.0 ** -k * min(1.0, norm_k(h, spec, u, k, dens)) for k in range(1, k_max + 1))


# -- two-dimensional boxes --------------------------------------------------

def box_integral(phi: Callable, x, y) -> float:
    """Alternating corner sum ``sum_eps (-1)^{d - |eps|} phi(corner_eps)`` over ``]x, y]``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    d = len(x)
    total = []
    for eps in itertools.product((0, 1), repeat=d):
        corner = np.where(np.array(eps, dtype=bool), y, x)
        total.append((-1) ** (d - sum(eps)) * float(phi(corner)))
    return math.fsum(total)


@dataclass(frozen=True, eq=False)
class BoxFunction:
    """``sum_j c_j 1_{]x_j, y_j]}`` in two dimensions."""

    lower: np.ndarray
    upper: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        lo = np.atleast_2d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_2d(np.asarray(self.upper, dtype=float))
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if lo.shape != hi.shape or lo.shape[0] != c.shape[0]:
            raise ValueError("box bounds and coefficients disagree in shape")
        if np.any(hi <= lo):
            raise ValueError("box upper corner must dominate the lower one")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.lower.shape[1]

    def evaluate(self, z):
        z = np.asarray(z, dtype=float)[..., None, :]
        inside = np.all((z > self.lower) & (z <= self.upper), axis=-1)
        return inside.astype(float) @ self.coeffs


def gamma_corners_2d(path: SamplePath, i: int, corners, eval_grid) -> np.ndarray:
    """``Gamma^c_t(u^i)`` for many corner points ``c`` (componentwise order)."""
    idx = _eval_index(path, eval_grid)
    cont = path.cont_increments[:, i]
    x_pre, x_post = path.values[:-1], path.left_limits()[1:]
    out = np.empty((len(corners), len(idx)))
    for j, c in enumerate(np.asarray(corners, dtype=float)):
        w_pre = -0.5 * np.all(x_pre <= c, axis=1) * cont
        w_post = 0.5 * np.all(x_post <= c, axis=1) * cont
        out[j] = level_accumulate(path, idx, np.array([0.0]), np.zeros(path.n), w_pre,
                                  np.zeros(path.n), w_post)[0]
    return out


def integrate_levels_multidim(f, path: SamplePath, i: int, t: float, method: str = "boxes") -> float:
    """``int f(z) d_z Gamma^z_t(u^i)`` for a two-dimensional path.

    ``f`` a BoxFunction and ``method="boxes"``: sum of corner increments.
    Any other ``f`` (or ``method="direct"``) goes through
    ``Gamma_t((f o u) * M^{u^i,c})``.
    """
    if path.dim != 2:
        raise GridMismatch(f"only d = 2 is implemented (got d = {path.dim})")
    if i not in (0, 1):
        raise IndexError("component index must be 0 or 1")
    k = _time_index(path, t)
    idx = np.array(sorted({0, k}))
    if isinstance(f, BoxFunction) and method == "boxes":
        if f.dim != 2:
            raise GridMismatch("box function must be two-dimensional")
        signs, corners, owner = [], [], []
        for j in range(len(f.coeffs)):
            for eps in itertools.product((0, 1), repeat=2):
                corners.append(np.where(np.array(eps, dtype=bool), f.upper[j], f.lower[j]))
                signs.append((-1) ** (2 - sum(eps)) * f.coeffs[j])
        g = gamma_corners_2d(path, i, corners, idx)[:, -1]
        return math.fsum(np.asarray(signs) * g)
    fn = f.evaluate if isinstance(f, BoxFunction) else f
    b = MafBuilder(f"f*M^{i}", lambda x: fn(x), i)
    return gamma(b, path, idx, "prefix").at(k)
