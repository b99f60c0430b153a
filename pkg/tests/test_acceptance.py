"""Acceptance criteria AC-1 .. AC-10 at their stated tolerances.

Each check prints one ``AC-k PASS/FAIL: ...`` line; under pytest the lines
are also collected in the terminal summary. Run this file directly to get
only the ten lines.
"""
import math
import sys
import warnings

import mpmath
import numpy as np
import pytest

from extito import functions as fn
from extito import harness as hz
from extito import jumps as jf
from extito import levels as lv
from extito import local_time as lt
from extito import montecarlo
from extito import nakao as nk
from extito import path_calculus as pc
from extito import process_models as pm

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:         # run as a script
    ACCEPTANCE_LINES = {}

pytestmark = pytest.mark.slow

N_PATHS = 1000
DTS = (1e-2, 1e-3, 1e-4)
BM = pm.brownian()
STABLE = pm.alpha_stable(1.2, delta=0.05)
U = fn.identity()


def record(key, ok, detail):
    line = f"{key} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES[key] = line
    print(line)
    return ok


def bm_config(**kw):
    base = dict(spec=BM, dts=DTS, n_paths=N_PATHS, seed_base=20240, checkpoints=(1.0,))
    base.update(kw)
    return hz.ExperimentConfig(**base)


# -----------------------------------------------------------------------------

class _LocalTimePair:
    def __init__(self, dt, h):
        self.dt, self.h = dt, h

    def __call__(self, seed):
        p = pm.simulate_path(BM, 1.0, self.dt, seed)
        g = nk.gamma_a(p, U, 0.0, [0, p.n], "prefix").final
        return -2.0 * g, lt.kernel_local_time_oracle(p, U, 0.0, self.h, 1.0)


def ac1():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", lt.BandwidthWarning)
        pairs = np.array(montecarlo.mc_map(_LocalTimePair(1e-4, 0.02),
                                           montecarlo.path_seeds(101, N_PATHS)))
    L, K = pairs.mean(axis=0)
    ref = math.sqrt(2 / math.pi)
    ok = abs(L - ref) <= 0.05 * ref and abs(L - K) <= 0.10 * K
    return record("AC-1", ok, f"mean -2Gamma^0_1 = {L:.4f} (E|B_1| = {ref:.4f}, "
                  f"rel {abs(L - ref) / ref:.3f} <= 0.05); kernel mean {K:.4f}, "
                  f"rel {abs(L - K) / K:.3f} <= 0.10")


def ac2():
    t = hz.convergence_table(bm_config(), "tanaka")
    means = [r.mean_residual for r in t.final_rows()]
    strict = all(b < a for a, b in zip(means, means[1:]))
    ok = strict and means[-1] <= 0.05
    return record("AC-2", ok, "mean |R_1| along dt " + ", ".join(
        f"{dt:g}: {m:.4f}" for dt, m in zip(DTS, means)) + " (decreasing, last <= 0.05)")


def ac3():
    c = bm_config(dts=(1e-4,), occupation_f=fn.indicator(-1.0, 1.0), level_cells=2 ** 8)
    (row,) = hz.run_identity(c, "occupation", 1e-4)
    ok = row.mean_residual <= 0.05
    return record("AC-3", ok, f"mean |lhs - rhs| / rhs = {row.mean_residual:.4f} <= 0.05 "
                  f"(dt 1e-4, 256 level cells)")


def ac4():
    c = bm_config(dts=(1e-4,), F=fn.smooth("square"))
    (row,) = hz.run_identity(c, "ito", 1e-4)
    q = row.extras["q_mean"]
    ok = abs(q - 1.0) <= 0.05 and row.mean_residual <= 0.05
    return record("AC-4", ok, f"Q_1 mean = {q:.4f} (within 5% of 1); mean |R_1| = "
                  f"{row.mean_residual:.2e} <= 0.05")


class _PureJump:
    def __call__(self, seed):
        p = pm.simulate_path(STABLE, 1.0, 1e-3, seed)
        gmax = max(np.max(np.abs(nk.gamma_a(p, U, a, "full", "prefix").values))
                   for a in (-0.5, 0.0, 0.3))
        row = hz.ito_assemble(p, U, fn.smooth("tanh"), (0.25, 0.5, 0.75, 1.0))
        m_d = jf.compensated_jump_sum(p, U, fn.smooth("tanh"), 0.0).m_d.final
        return gmax, float(np.max(np.abs(row.residual))), m_d


def ac5():
    out = np.array(montecarlo.mc_map(_PureJump(), montecarlo.path_seeds(505, N_PATHS)))
    gmax, rmax = out[:, 0].max(), out[:, 1].max()
    test = hz.martingale_mean_test(out[:, 2])
    ok = gmax == 0.0 and rmax <= 1e-12 and test.passed
    return record("AC-5", ok, f"max |Gamma^a| = {gmax:.1e}; max |R| over checkpoints = {rmax:.1e} "
                  f"<= 1e-12; M^d_1(tanh) z = {test.z:.2f} (|z| <= 3)")


def ac6():
    rng = np.random.default_rng(606)
    worst = 0.0
    specs = [BM, pm.brownian_jumps(1.0, 1.2, scale=0.5)]
    for j in range(20):
        p = pm.simulate_path(specs[j % 2], 1.0, 1e-3, 600 + j)
        u = U if j % 3 else fn.smooth("tanh")
        lo, hi = float(np.min(u.value(p.values))), float(np.max(u.value(p.values)))
        for _ in range(20):
            m = int(rng.integers(1, 30))
            z = np.sort(rng.uniform(lo - 0.2, hi + 0.2, m + 1))
            f = lv.ElementaryFunction(lv.LevelGrid(z), rng.normal(size=m))
            a = lv.integrate_levels_elementary(f, p, u, 1.0)
            b = lv.integrate_levels(f.as_descriptor(), p, u, 1.0)
            worst = max(worst, abs(a - b))
    return record("AC-6", worst <= 1e-12, f"max |elementary - Gamma((f o u) * M)| = {worst:.1e} "
                  f"over 20 paths x 20 step functions")


def s_closed_form(spec, eps):
    """``int_{|y| < eps} y^2 nu(dy)`` for the truncated stable density, by mpmath."""
    a, c, d = spec.alpha, spec.scale, spec.delta
    if eps <= d:
        return mpmath.mpf(0)
    return 2 * c * mpmath.quad(lambda y: y ** (1 - a), [d, eps])


def ac7():
    seq = jf.truncation_sequence(STABLE, U, 8)
    ok = len(seq) >= 8
    margins = []
    for n, e in enumerate(seq.eps[:8], start=1):
        s = s_closed_form(STABLE, mpmath.mpf(float(e)))
        exact = 2 * STABLE.scale * (e ** (2 - STABLE.alpha) - STABLE.delta ** (2 - STABLE.alpha)) \
            / (2 - STABLE.alpha) if e > STABLE.delta else 0.0
        ok &= abs(float(s) - exact) <= 1e-12 and s < mpmath.mpf(2) ** (-4 * n)
        margins.append(float(s) * 2 ** (4 * n))
    return record("AC-7", bool(ok), f"{len(seq)} levels; S_eps_n * 2^(4n) for n <= 8 (mpmath): "
                  f"max {max(margins):.10f} < 1")


class _Support:
    def __call__(self, seed):
        p = pm.simulate_path(BM, 1.0, 1e-4, seed)
        L = lt.local_time(p, U, 0.0, [0, p.n]).final
        s = lt.support_check(p, U, 0.0, 1.0)
        return s / L if L > 0 else 0.0


def ac8():
    ratios = np.array(montecarlo.mc_map(_Support(), montecarlo.path_seeds(808, N_PATHS)))
    frac = float(np.mean(ratios <= 1e-2))
    return record("AC-8", frac >= 0.95, f"int X^4 dL^0 / L^0_1 <= 1e-2 on {100 * frac:.1f}% of "
                  f"paths (>= 95%); 95th percentile {np.quantile(ratios, 0.95):.1e}")


def ac9():
    c = hz.ExperimentConfig(pm.diffusion2d(), F=fn.f2_product(), dts=DTS, n_paths=N_PATHS,
                            seed_base=909, checkpoints=(1.0,))
    t = hz.convergence_table(c, "multidim")
    means = [r.mean_residual for r in t.final_rows()]
    ok = t.decreasing and means[-1] <= 0.05
    return record("AC-9", ok, "mean |R_1| along dt " + ", ".join(
        f"{dt:g}: {m:.1e}" for dt, m in zip(DTS, means)) + f" (trend ok, exact below {hz.EXACT_FLOOR:g})")


def ac10():
    rng = np.random.default_rng(1010)
    specs = [BM, pm.brownian_jumps(1.0, 1.2, scale=0.5), STABLE, pm.compound_poisson(5.0)]
    us = [U, fn.smooth("tanh"), fn.smooth("atan")]
    fuku = exhaust = lin = inv = 0.0
    for j in range(100):
        spec = specs[j % len(specs)]
        p = pm.simulate_path(spec, 1.0, 1e-3, 1000 + j)
        u = us[j % len(us)]
        fuku = max(fuku, pc.fukushima_decompose(p, u).bookkeeping_error())
        F = fn.smooth(["tanh", "sin", "square"][j % 3])
        total = jf.all_jumps_term(p, u, F).values
        parts = jf.compensated_jump_sum(p, u, F, 0.0).raw.values + jf.big_jump_term(p, u, F).values
        exhaust = max(exhaust, float(np.max(np.abs(total - parts))))
        m = pc.m_uc(p, u)
        f1, f2 = rng.normal(size=p.n), rng.normal(size=p.n)
        a, b = rng.normal(size=2)
        lhs = pc.ito_integral(a * f1 + b * f2, m).values
        rhs = a * pc.ito_integral(f1, m).values + b * pc.ito_integral(f2, m).values
        lin = max(lin, float(np.max(np.abs(lhs - rhs))))
        q = pm.simulate_path(BM, 1.0, 1e-3, 5000 + j)
        k = int(rng.integers(1, q.n + 1))
        r = nk.reverse_path(nk.reverse_path(q, k), k)
        inv = max(inv, float(np.max(np.abs(r.values - q.values[:k + 1]))),
                  float(np.max(np.abs(r.cont_increments - q.cont_increments[:k]), initial=0.0)))
    worst = max(fuku, exhaust, lin, inv)
    return record("AC-10", worst <= 1e-12, f"100 cases each: Fukushima {fuku:.1e}, jump accounting "
                  f"{exhaust:.1e}, linearity {lin:.1e}, reversal involution {inv:.1e} (<= 1e-12)")


CHECKS = [ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10]


def test_ac1_local_time_equivalence():
    assert ac1()


def test_ac2_tanaka_residual():
    assert ac2()


def test_ac3_occupation_density():
    assert ac3()


def test_ac4_ito_c2_cross_check():
    assert ac4()


def test_ac5_pure_jump_exactness():
    assert ac5()


def test_ac6_level_integration():
    assert ac6()


def test_ac7_truncation_bound():
    assert ac7()


def test_ac8_support_property():
    assert ac8()


def test_ac9_multidimensional_ito():
    assert ac9()


def test_ac10_bookkeeping():
    assert ac10()


if __name__ == "__main__":
    results = [check() for check in CHECKS]
    sys.exit(0 if all(results) else 1)
