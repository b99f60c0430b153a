"""Compensated sums of mid-size jumps of ``F(u(X))``, the truncation
sequence that makes their limit exist, and the big-jump term.

Jumps with ``eps < |du| < 1`` are compensated; jumps with ``|du| >= 1``
are left raw (bounded variation part). Every catalog model has a finite
Lévy measure, so the limit ``eps -> 0`` is attained at ``eps = 0+``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import montecarlo
from .functions import FunctionDescriptor
from .path_calculus import AfPath, full_index
from .process_models import (JUMP_KINDS, ParameterDomainError, ProcessSpec, SamplePath,
                             SEpsConfig, jump_rate, s_epsilon, simulate_path)

BIG = 1.0
SAFETY = 1e-6   # relative slack below 2^{-4n}, so independent quadratures agree on the sign


@dataclass(frozen=True, eq=False)
class TruncationSequence:
    eps: np.ndarray
    s_values: np.ndarray
    floor_reached: bool = False

    def __post_init__(self):
        e = np.asarray(self.eps, dtype=float)
        if e.ndim != 1 or len(e) == 0 or np.any(e <= 0) or np.any(np.diff(e) >= 0):
            raise ValueError("truncation levels must be positive and strictly decreasing")
        object.__setattr__(self, "eps", e)
        object.__setattr__(self, "s_values", np.asarray(self.s_values, dtype=float))

    def __len__(self):
        return len(self.eps)

    def bound_ok(self) -> bool:
        n = np.arange(1, len(self.eps) + 1)
        return bool(np.all(self.s_values < 2.0 ** (-4.0 * n)))


def truncation_sequence(spec: ProcessSpec, u: FunctionDescriptor, count: int,
                        config: SEpsConfig = SEpsConfig(), iters: int = 80) -> TruncationSequence:
    """``eps_1 > eps_2 > ...`` with ``S_{eps_n} < 2^{-4n}``, by bisection on ``s_epsilon``.

    When the model has a jump-size floor with ``S = 0`` below it and the
    bisection can no longer separate ``eps_n`` from the floor, the
    sequence ends at the floor (``floor_reached``).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    S = lambda e: s_epsilon(spec, u, e, config)
    floor = spec.jump_floor if spec.kind in JUMP_KINDS else 0.0
    exact_floor = floor > 0 and S(floor) == 0.0
    eps, svals, prev = [], [], BIG
    reached = False
    for n in range(1, count + 1):
        target = 2.0 ** (-4 * n) * (1.0 - SAFETY)
        hi, lo = prev, prev / 2
        k = 0
        while S(lo) >= target:
            hi, lo = lo, lo / 2
            k += 1
            if k > 400:
                raise ParameterDomainError("s_epsilon does not decrease to 0")
        if exact_floor:
            lo = max(lo, floor)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if S(mid) < target:
                lo = mid
            else:
                hi = mid
        if exact_floor and lo - floor <= 1e-12 * floor:
            lo = floor
            reached = True
        if lo >= prev:
            break
        eps.append(lo)
        svals.append(S(lo))
        prev = lo
        if reached:
            break
    return TruncationSequence(np.array(eps), np.array(svals), reached)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JumpTerms:
    raw: AfPath
    compensator: AfPath
    m_d: AfPath
    eps: float

    def at(self, k: int) -> tuple[float, float, float]:
        return self.raw.at(k), self.compensator.at(k), self.m_d.at(k)


def _du(path: SamplePath, u: FunctionDescriptor):
    left = path.jump_left_values
    right = path.values[path.jump_index]
    return u.value(right) - u.value(left), u.value(left), u.value(right)


def _ledger_sum(path: SamplePath, contrib) -> AfPath:
    dense = np.zeros(path.n + 1)
    np.add.at(dense, path.jump_index, contrib)
    return AfPath(full_index(path), np.cumsum(dense), path)


def compensator_rates(path: SamplePath, u: FunctionDescriptor, F: FunctionDescriptor,
                      eps: float, r: float = BIG) -> np.ndarray:
    """``int_{eps < |du| < r} (F(u(x + y)) - F(u(x))) nu(dy)`` at every left state."""
    spec = path.spec
    if spec.kind not in JUMP_KINDS or spec.total_intensity == 0 or F.form == "constant":
        return np.zeros(path.n)
    if u.is_identity and F.is_identity:
        return np.zeros(path.n)   # odd integrand, symmetric nu

    def h(x, y):
        return F.value(u.value(x + y)) - F.value(u.value(x))
    return jump_rate(spec, path.values[:-1], h, u=u, eps=eps, r=r)


def compensated_jump_sum(path: SamplePath, u: FunctionDescriptor, F: FunctionDescriptor,
                         eps: float) -> JumpTerms:
    """Raw sum of ``F(u(X_s)) - F(u(X_{s-}))`` over jumps with ``eps < |du| < 1``,
    its compensator (left state frozen over each step) and ``M^d = raw - A``.

    ``eps = 0`` means ``0+``: every nonzero sub-unit jump counts.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if path.dim != 1:
        raise ValueError("jump functionals are one-dimensional")
    du, ul, ur = _du(path, u)
    mid = (np.abs(du) > eps) & (np.abs(du) < BIG)
    raw = _ledger_sum(path, np.where(mid, F.value(ur) - F.value(ul), 0.0))
    rates = compensator_rates(path, u, F, eps)
    comp = AfPath(raw.index, np.concatenate([[0.0], np.cumsum(rates * path.dt)]), path)
    return JumpTerms(raw, comp, raw - comp, float(eps))


def big_jump_term(path: SamplePath, u: FunctionDescriptor, F: FunctionDescriptor) -> AfPath:
    """``V_t = sum (F(u(X_s)) - F(u(X_{s-}))) 1{|du| >= 1}``; no killing term."""
    du, ul, ur = _du(path, u)
    return _ledger_sum(path, np.where(np.abs(du) >= BIG, F.value(ur) - F.value(ul), 0.0))


def all_jumps_term(path: SamplePath, u: FunctionDescriptor, F: FunctionDescriptor) -> AfPath:
    """Sum of ``F(u(X_s)) - F(u(X_{s-}))`` over the whole ledger."""
    du, ul, ur = _du(path, u)
    return _ledger_sum(path, F.value(ur) - F.value(ul))


@dataclass(frozen=True)
class MdLimit:
    m_d: AfPath
    a: AfPath
    levels: list = field(default_factory=list)      # JumpTerms per eps_n
    sup_diffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    monotone: bool = True
    extrapolated: float | None = None
    c_k: float = math.nan


def _aitken(x):
    if len(x) < 3:
        return None
    a, b, c = x[-3:]
    den = c - 2 * b + a
    if den == 0:
        return float(c)
    return float(c - (c - b) ** 2 / den)


def m_d_limit(path: SamplePath, u: FunctionDescriptor, F: FunctionDescriptor,
              seq: TruncationSequence) -> MdLimit:
    """``M^d(F, u)`` and ``A(F, u)`` at ``eps = 0+`` plus diagnostics along ``seq``.

    Diagnostics: sup-norm differences between successive levels (flagged if
    they ever increase), an Aitken extrapolation of ``M^d_T`` along the
    sequence (an extrapolation, not the value returned), and
    ``c_k = sup |F'|`` on ``[-k, k]`` with ``k`` covering the path's u-range.
    """
    levels = [compensated_jump_sum(path, u, F, float(e)) for e in seq.eps]
    limit = compensated_jump_sum(path, u, F, 0.0)
    finals = [lv.m_d.final for lv in levels]
    diffs = np.array([np.max(np.abs(b.m_d.values - a.m_d.values)) for a, b in zip(levels, levels[1:])])
    monotone = bool(np.all(np.diff(diffs) <= 1e-14)) if len(diffs) > 1 else True
    k = max(1.0, math.ceil(float(np.max(np.abs(u.value(path.values))))))
    try:
        ck = F.sup_abs_deriv(-k, k)
    except Exception:
        ck = math.nan
    return MdLimit(limit.m_d, limit.compensator, levels, diffs, monotone, _aitken(finals), ck)


class _BandEnergy:
    def __init__(self, spec, u, F, eps, t, dt, window):
        self.spec, self.u, self.F, self.eps = spec, u, F, eps
        self.t, self.dt, self.window = t, dt, window

    def __call__(self, seed):
        rng = np.random.default_rng([seed, 3])
        path = simulate_path(self.spec, self.t, self.dt, seed, start=rng.uniform(*self.window))
        x = path.values[:-1]
        h = lambda xc, y: (self.F.value(self.u.value(xc + y)) - self.F.value(self.u.value(xc))) ** 2
        out = []
        for hi, lo in zip(self.eps, self.eps[1:]):
            rate = jump_rate(self.spec, x, h, u=self.u, eps=lo, r=hi)
            out.append(math.fsum(rate * self.dt) / (2.0 * self.t))
        return out


def difference_energies(spec: ProcessSpec, u: FunctionDescriptor, F: FunctionDescriptor,
                        seq: TruncationSequence, t: float = 1.0, dt: float = 1e-3,
                        n_paths: int = 200, seed: int = 0, window=(-3.0, 3.0), workers: int = 1):
    """Energies of ``M^d(n+1) - M^d(n)`` from their predictable brackets
    ``(1/2t) int_0^t int_{band_n} (dF)^2 nu(dy) ds`` averaged over starts
    uniform on ``window``. Returns a list of ``montecarlo.Summary``.
    """
    if len(seq) < 2:
        return []
    vals = montecarlo.mc_map(_BandEnergy(spec, u, F, list(seq.eps), t, dt, window),
                             montecarlo.path_seeds(seed, n_paths), workers)
    arr = np.asarray(vals)
    return [montecarlo.summarize(arr[:, j]) for j in range(arr.shape[1])]
