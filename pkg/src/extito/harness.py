"""End-to-end checks of the extended Itô formula, the Tanaka formula, the
occupation density and local-time identities, with seed-keyed Monte Carlo
aggregation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import montecarlo
from .functions import FunctionDescriptor, Function2D, custom, identity, indicator, neg_part
from .jumps import all_jumps_term, big_jump_term, compensated_jump_sum
from .local_time import kernel_local_time_oracle, local_time, occupation_check
from .nakao import MafBuilder, composed_builder, gamma, z_a, gamma_a
from .path_calculus import AfPath, continuous_martingale
from .process_models import Kind, ProcessSpec, SamplePath, shift_path, simulate_path

IDENTITIES = ("ito", "tanaka", "occupation", "localtime", "multidim")
EXACT_FLOOR = 1e-12

DEFAULT_TOLERANCES = {
    "ito": 0.05,          # mean |R_T|
    "tanaka": 0.05,       # mean |R_T|
    "occupation": 0.05,   # mean |lhs - rhs| / rhs
    "localtime": 0.10,    # |mean L - mean kernel| / mean kernel
    "multidim": 0.05,     # mean |R_T|
    "z_max": 3.0,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    spec: ProcessSpec
    u: FunctionDescriptor = field(default_factory=identity)
    F: FunctionDescriptor | Function2D | None = None
    T: float = 1.0
    dts: tuple = (1e-2, 1e-3, 1e-4)
    n_paths: int = 1000
    seed_base: int = 0
    level_cells: int = 2 ** 8
    checkpoints: tuple | None = None
    start: str = "fixed"
    burn_in: float | None = None
    level: float = 0.0
    occupation_f: FunctionDescriptor = field(default_factory=lambda: indicator(-1.0, 1.0))
    bandwidth: float = 0.02
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        d = np.asarray(self.dts, dtype=float)
        if d.ndim != 1 or len(d) == 0 or np.any(d <= 0):
            raise ConfigError("dt list must be nonempty and positive")
        if np.any(np.diff(d) >= 0):
            raise ConfigError("dt list must be strictly decreasing")
        if self.n_paths < 2:
            raise ConfigError("n_paths must be >= 2")
        if self.T <= 0:
            raise ConfigError("T must be positive")
        if self.start not in ("fixed", "stationary"):
            raise ConfigError(f"unknown start protocol {self.start!r}")
        for t in self.checkpoint_times:
            if not 0 < t <= self.T:
                raise ConfigError(f"checkpoint {t} outside (0, T]")

    @property
    def checkpoint_times(self) -> tuple:
        if self.checkpoints is None:
            return (self.T / 4, self.T / 2, self.T)
        return tuple(sorted(float(t) for t in self.checkpoints))

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))


def checkpoint_index(path: SamplePath, times) -> np.ndarray:
    ks = [int(round(t / path.dt)) for t in times]
    if any(abs(k * path.dt - t) > 1e-9 * max(t, path.dt) for k, t in zip(ks, times)):
        raise ConfigError("checkpoints must be multiples of dt")
    return np.array(sorted({0, *ks}))


def draw_path(spec: ProcessSpec, T: float, dt: float, seed: int, start: str = "fixed",
              burn_in: float | None = None) -> SamplePath:
    """One path under the chosen start protocol.

    ``stationary``: simulate ``B + T``, drop ``[0, B]`` and start from ``X_B``
    (``B`` defaults to ``10 T``).
    """
    if start == "fixed":
        return simulate_path(spec, T, dt, seed)
    B = 10.0 * T if burn_in is None else burn_in
    kb = int(round(B / dt))
    long = simulate_path(spec, kb * dt + T, dt, seed)
    return shift_path(long, kb)


# -- Itô formula ------------------------------------------------------------

@dataclass(frozen=True)
class ItoRow:
    """Terms of the decomposition at the checkpoints; the residual is derived."""

    index: np.ndarray
    lhs: np.ndarray
    m: np.ndarray
    q: np.ndarray
    v: np.ndarray
    q_gamma: np.ndarray
    a: np.ndarray
    m_d: np.ndarray
    left_continuous_derivative: bool = False

    @property
    def residual(self) -> np.ndarray:
        return self.lhs - (self.m + self.q + self.v)


def _derivative_descriptor(F: FunctionDescriptor) -> FunctionDescriptor:
    return custom(F.deriv, label=f"{F}'")


def ito_assemble(path: SamplePath, u: FunctionDescriptor, F: FunctionDescriptor,
                 checkpoints=None) -> ItoRow:
    """``F(u(X_t)) - F(u(X_0)) = M + Q + V`` with
    ``M = M^d + int F'(u) dM^{u,c}``, ``Q = int F' d_z Gamma^z + A``, ``V`` big jumps.
    """
    if path.dim != 1:
        raise ConfigError("use multidim_ito_check for two-dimensional paths")
    if abs(float(F.value(0.0))) > 0:
        raise ConfigError(f"F must satisfy F(0) = 0 (got {float(F.value(0.0))})")
    idx = checkpoint_index(path, checkpoints or (path.horizon,))
    dF = _derivative_descriptor(F)
    mc = continuous_martingale(path, lambda x: F.deriv(u.value(x)) * u.deriv(x))
    qg = gamma(composed_builder(dF, u), path, idx, "prefix")
    jt = compensated_jump_sum(path, u, F, 0.0)
    v = big_jump_term(path, u, F)
    fu = F.value(u.value(path.values))
    m_d = jt.m_d.values[idx]
    a = jt.compensator.values[idx]
    kinky = F.form in ("abs_shift", "neg_part", "piecewise_linear", "clip")
    return ItoRow(idx, fu[idx] - fu[0], m_d + mc.values[idx], qg.values + a, v.values[idx],
                  qg.values, a, m_d, kinky)


# -- Tanaka formula ---------------------------------------------------------

def tanaka_residual(path: SamplePath, u: FunctionDescriptor, a: float, checkpoints=None) -> AfPath:
    """``Gamma^a_t`` minus
    ``(u(X_0)-a)^- - (u(X_t)-a)^- - int 1{u(X_-) <= a} dM^{u,c} + sum_jumps d(u - a)^-``.
    The jump sum is taken at ``eps = 0+``.
    """
    idx = checkpoint_index(path, checkpoints or (path.horizon,))
    F = neg_part(a)
    fu = F.value(u.value(path.values))
    rhs = fu[0] - fu[idx] - z_a(path, u, a).values[idx] + all_jumps_term(path, u, F).values[idx]
    lhs = gamma_a(path, u, a, idx, "prefix").values
    return AfPath(idx, lhs - rhs, path)


# -- two dimensions -----------------------------------------------------------

def multidim_ito_check(path: SamplePath, F: Function2D, checkpoints=None) -> ItoRow:
    """Two-dimensional decomposition for a continuous diffusion (``A = V = 0``)."""
    if path.dim != 2 or path.spec.kind != Kind.DIFFUSION_2D:
        raise ConfigError("multidim_ito_check needs a two-dimensional diffusion path")
    idx = checkpoint_index(path, checkpoints or (path.horizon,))
    m = np.zeros(len(idx))
    q = np.zeros(len(idx))
    for i in (0, 1):
        g = lambda x, i=i: F.partial(i, x)
        m += continuous_martingale(path, g, component=i).values[idx]
        q += gamma(MafBuilder(f"f{i}*M^{i}", g, i), path, idx, "prefix").values
    fv = F.value(path.values)
    zero = np.zeros(len(idx))
    return ItoRow(idx, fv[idx] - fv[0], m, q, zero, q, zero, zero)


# -- statistics -------------------------------------------------------------

@dataclass(frozen=True)
class MeanTest:
    z: float
    passed: bool
    n: int


def martingale_mean_test(samples, z_max: float = 3.0) -> MeanTest:
    """``z = mean / SE``; passes iff ``|z| <= z_max``. All-zero samples pass."""
    v = np.asarray(samples, dtype=float).ravel()
    if len(v) < 30:
        raise ValueError("martingale_mean_test needs at least 30 samples")
    s = montecarlo.summarize(v)
    if s.se == 0 or not math.isfinite(s.se):
        z = 0.0 if s.mean == 0 else math.copysign(math.inf, s.mean)
    else:
        z = s.mean / s.se
    return MeanTest(z, abs(z) <= z_max, len(v))


@dataclass(frozen=True)
class ReportRow:
    identity: str
    dt: float
    t_checkpoint: float
    n_paths: int
    mean_residual: float      # mean |R|
    se_residual: float
    max_abs_residual: float
    passed: bool
    extras: dict = field(default_factory=dict)


class _PathTask:
    """Per-seed work for one identity; returns one row of residuals (and extras)."""

    def __init__(self, config: ExperimentConfig, identity: str, dt: float):
        self.c, self.identity, self.dt = config, identity, dt

    def __call__(self, seed):
        c = self.c
        path = draw_path(c.spec, c.T, self.dt, seed, c.start, c.burn_in)
        times = c.checkpoint_times
        if self.identity == "ito":
            row = ito_assemble(path, c.u, c.F, times)
            return np.stack([row.residual[1:], row.q[1:], row.m[1:], row.m_d[1:]])
        if self.identity == "multidim":
            row = multidim_ito_check(path, c.F, times)
            return np.stack([row.residual[1:], row.q[1:], row.m[1:], row.m_d[1:]])
        if self.identity == "tanaka":
            return np.atleast_2d(tanaka_residual(path, c.u, c.level, times).values[1:])
        if self.identity == "occupation":
            out = [occupation_check(path, c.u, c.occupation_f, t, n_cells=c.level_cells)
                   for t in times]
            lhs, rhs = np.array(out).T
            rel = np.where(rhs > 0, (lhs - rhs) / np.where(rhs > 0, rhs, 1.0), lhs)
            return np.stack([rel, lhs, rhs])
        if self.identity == "localtime":
            idx = checkpoint_index(path, times)
            L = local_time(path, c.u, c.level, idx).values[1:]
            K = np.array([kernel_local_time_oracle(path, c.u, c.level, c.bandwidth, t) for t in times])
            return np.stack([L - K, L, K])
        raise ConfigError(f"unknown identity {self.identity!r}")


def run_identity(config: ExperimentConfig, identity: str, dt: float) -> list[ReportRow]:
    """Monte Carlo rows (one per checkpoint) for ``identity`` at step ``dt``.

    Results depend only on ``(config, seed_base)``: path ``j`` uses seed
    ``seed_base + j`` and reductions are exactly rounded.
    """
    if identity not in IDENTITIES:
        raise ConfigError(f"unknown identity {identity!r}")
    if identity in ("ito", "multidim") and config.F is None:
        raise ConfigError("the Itô checks need an outer function F")
    seeds = montecarlo.path_seeds(config.seed_base, config.n_paths)
    data = np.asarray(montecarlo.mc_map(_PathTask(config, identity, dt), seeds, config.workers))
    rows = []
    tol = config.tol(identity)
    for j, t in enumerate(config.checkpoint_times):
        res = data[:, 0, j]
        s_abs = montecarlo.summarize(np.abs(res))
        extras = {}
        if identity in ("ito", "multidim"):
            q = montecarlo.summarize(data[:, 1, j])
            extras.update(q_mean=q.mean, q_se=q.se)
            mt = martingale_mean_test(data[:, 2, j], config.tol("z_max")) \
                if config.n_paths >= 30 else None
            if mt is not None:
                extras.update(m_z=mt.z)
            passed = s_abs.mean <= tol and (mt is None or mt.passed)
        elif identity == "localtime":
            L = montecarlo.summarize(data[:, 1, j])
            K = montecarlo.summarize(data[:, 2, j])
            extras.update(l_mean=L.mean, kernel_mean=K.mean)
            passed = abs(L.mean - K.mean) <= tol * K.mean if K.mean > 0 else abs(L.mean) <= tol
        else:
            passed = s_abs.mean <= tol
        rows.append(ReportRow(identity, dt, t, config.n_paths, s_abs.mean, s_abs.se,
                              s_abs.max_abs, bool(passed), extras))
    return rows


def trend_decreasing(values, floor: float = EXACT_FLOOR) -> bool:
    """Nonincreasing in at least 2 of every 3 consecutive refinements.

    Values at or below ``floor`` count as converged (exact identities have
    no trend to show).
    """
    v = np.maximum(np.asarray(values, dtype=float), floor)
    steps = np.diff(v) <= 0
    if len(steps) == 0:
        return True
    if len(steps) < 3:
        return bool(np.all(steps))
    return all(np.sum(steps[i:i + 3]) >= 2 for i in range(len(steps) - 2))


@dataclass(frozen=True)
class ConvergenceTable:
    identity: str
    rows: list
    decreasing: bool

    def final_rows(self) -> list:
        T = max(r.t_checkpoint for r in self.rows)
        return [r for r in self.rows if r.t_checkpoint == T]

    @property
    def passed(self) -> bool:
        return self.decreasing and all(r.passed for r in self.final_rows()[-1:])


def convergence_table(config: ExperimentConfig, identity: str) -> ConvergenceTable:
    if len(config.dts) < 2:
        raise ConfigError("≥ 2 dt values required")
    rows = []
    for dt in config.dts:
        rows.extend(run_identity(config, identity, dt))
    T = max(config.checkpoint_times)
    trend = trend_decreasing([r.mean_residual for r in rows if r.t_checkpoint == T])
    return ConvergenceTable(identity, rows, trend)


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **kw)
