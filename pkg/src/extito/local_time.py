"""Local times of ``u(X)`` built from ``Gamma^a`` and the continuous
zero-energy part of ``u(X)``: ``L^a = -2 Gamma^a + 2 l^a`` with
``l^a_t = int_0^t 1{u(X_{s-}) <= a} d^cN^u_s``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .functions import FunctionDescriptor
from .levels import LevelGrid, default_level_grid, integrate_levels, _time_index
from .nakao import (_eval_index, gamma_increments, gamma_levels, level_accumulate,
                    muc_builder, za_builder, gamma)
from .path_calculus import AfPath
from .process_models import SamplePath


class BandwidthWarning(UserWarning):
    pass


def cn_increments(path: SamplePath, u: FunctionDescriptor) -> np.ndarray:
    """Per-step increments of ``^cN^u = Gamma(M^{u,c})``."""
    return gamma_increments(muc_builder(u), path)


def local_time(path: SamplePath, u: FunctionDescriptor, a: float, eval_grid=None) -> AfPath:
    """``L^a`` on ``eval_grid`` (full grid by default)."""
    idx = _eval_index(path, "full" if eval_grid is None else eval_grid)
    g = gamma(za_builder(u, a), path, idx, "prefix")
    x = path.values[:-1]
    l_inc = np.where(u.value(x) <= a, cn_increments(path, u), 0.0)
    l = np.concatenate([[0.0], np.cumsum(l_inc)])[idx]
    return AfPath(idx, -2.0 * g.values + 2.0 * l, path)


@dataclass(frozen=True, eq=False)
class LocalTimeField:
    """``L^z_t`` on ``levels x eval index``; right-continuous step function in ``z``."""

    grid: LevelGrid
    index: np.ndarray
    values: np.ndarray      # shape (n_levels, n_eval)
    dt: float

    def at(self, a, k: int | None = None):
        """``L^a`` at eval position ``k`` (last by default) with ``a`` snapped down to the grid."""
        col = self.values[:, -1] if k is None else self.values[:, int(np.searchsorted(self.index, k))]
        pos = np.searchsorted(self.grid.levels, np.asarray(a, dtype=float), side="right") - 1
        inside = (pos >= 0) & (pos < len(self.grid.levels) - 1)
        return np.where(inside, col[np.clip(pos, 0, len(col) - 1)], 0.0)

    def final(self) -> np.ndarray:
        return self.values[:, -1]


def local_time_field(path: SamplePath, u: FunctionDescriptor, grid: LevelGrid | None = None,
                     eval_grid=None) -> LocalTimeField:
    """All levels share one pass over the path."""
    grid = grid or default_level_grid(path, u)
    idx = _eval_index(path, eval_grid)
    g = gamma_levels(path, u, grid.levels, idx)
    x = path.values[:-1]
    zero = np.zeros(path.n)
    l = level_accumulate(path, idx, grid.levels, u.value(x), cn_increments(path, u), x, zero)
    return LocalTimeField(grid, idx, -2.0 * g + 2.0 * l, path.dt)


def occupation_rhs(path: SamplePath, u: FunctionDescriptor, f: FunctionDescriptor, k: int) -> float:
    """``int_0^t f(u(X_s)) d<M^{u,c}>_s`` with the predictable bracket."""
    x = path.values[:k]
    return math.fsum(f.value(u.value(x)) * u.deriv(x) ** 2 * path.spec.sigma2 * path.dt)


def occupation_check(path: SamplePath, u: FunctionDescriptor, f: FunctionDescriptor, t: float,
                     grid: LevelGrid | None = None, n_cells: int = 2 ** 8) -> tuple[float, float]:
    """``(int f(z) L^z_t dz, int_0^t f(u(X_s)) d<M^{u,c}>_s)``; lhs by the trapezoid rule."""
    k = _time_index(path, t)
    grid = grid or default_level_grid(path, u, n_cells)
    field = local_time_field(path, u, grid, np.array(sorted({0, k})))
    z = grid.levels
    lhs = float(trapezoid(f.value(z) * field.final(), z))
    return lhs, occupation_rhs(path, u, f, k)


def kernel_local_time_oracle(path: SamplePath, u: FunctionDescriptor, a: float, h: float,
                             t: float) -> float:
    """``(1/2h) int_0^t 1{|u(X_s) - a| < h} d<M^{u,c}>_s``; independent of ``Gamma``."""
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    k = _time_index(path, t)
    x = path.values[:k]
    d = u.deriv(x)
    typical = math.sqrt(path.spec.sigma2 * path.dt) * float(np.median(np.abs(d))) if k else 0.0
    if h < 2.0 * typical:
        warnings.warn(f"bandwidth {h} is below twice the typical increment {typical:.3g}",
                      BandwidthWarning, stacklevel=2)
    w = (np.abs(u.value(x) - a) < h) * d ** 2 * path.spec.sigma2 * path.dt
    return math.fsum(w) / (2.0 * h)


def support_check(path: SamplePath, u: FunctionDescriptor, a: float, t: float,
                  power: float = 4) -> float:
    """Stieltjes sum ``sum (u(X_{t_i}) - a)^power (L^a_{i+1} - L^a_i)`` up to ``t``."""
    k = _time_index(path, t)
    L = local_time(path, u, a).values[:k + 1]
    w = (u.value(path.values[:k]) - a) ** power if power != 0 else np.ones(k)
    return math.fsum(w * np.diff(L))


def integrate_levels_localtime(f: FunctionDescriptor, path: SamplePath, u: FunctionDescriptor,
                               t: float) -> float:
    """``-1/2 int f(z) d_z L^z_t = int f d_z Gamma^z_t - int_0^t f(u(X_s)) d^cN^u_s``."""
    k = _time_index(path, t)
    first = integrate_levels(f, path, u, t)
    x = path.values[:k]
    second = math.fsum(f.value(u.value(x)) * cn_increments(path, u)[:k])
    return first - second
