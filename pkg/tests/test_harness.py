import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from extito import functions as fn
from extito import harness as hz
from extito import montecarlo
from extito import process_models as pm

STABLE = pm.alpha_stable(1.2, delta=0.05)


def test_constant_zero_f(mixed_path):
    row = hz.ito_assemble(mixed_path, fn.smooth("tanh"), fn.constant(0.0), (0.5, 1.0))
    for arr in (row.lhs, row.m, row.q, row.v, row.residual):
        assert np.all(arr == 0)


def test_f_must_vanish_at_zero(bm_path):
    with pytest.raises(hz.ConfigError):
        hz.ito_assemble(bm_path, fn.identity(), fn.constant(1.0))


def test_identity_f_on_levy_is_bookkeeping(mixed_path):
    u = fn.identity()
    row = hz.ito_assemble(mixed_path, u, u, (0.25, 0.5, 1.0))
    assert np.max(np.abs(row.residual)) <= 1e-12
    assert np.all(row.a == 0)


@given(st.integers(0, 10 ** 6), st.sampled_from(["tanh", "sin", "square", "atan"]),
       st.sampled_from(["identity", "tanh", "atan"]))
@settings(max_examples=30)
def test_pure_jump_exactness(seed, fname, uname):
    p = pm.simulate_path(STABLE, 1.0, 1e-3, seed)
    u = fn.identity() if uname == "identity" else fn.smooth(uname)
    F = fn.smooth(fname)
    row = hz.ito_assemble(p, u, F, (0.25, 0.5, 1.0))
    assert np.max(np.abs(row.residual)) <= 1e-12
    assert np.all(row.q_gamma == 0)


def test_kink_flagged(bm_path):
    assert hz.ito_assemble(bm_path, fn.identity(), fn.abs_shift(0.0)).left_continuous_derivative
    assert not hz.ito_assemble(bm_path, fn.identity(), fn.smooth("tanh")).left_continuous_derivative


def test_square_on_bm_matches_classical_q():
    qs = [hz.ito_assemble(pm.simulate_path(pm.brownian(), 1.0, 1e-3, s), fn.identity(),
                          fn.smooth("square")).q[-1] for s in range(300)]
    m = montecarlo.summarize(qs)
    assert abs(m.mean - 1.0) <= 0.05


def test_tanaka_pure_jump_is_zero(jump_path):
    for a in (-0.3, 0.0, 0.2):
        r = hz.tanaka_residual(jump_path, fn.identity(), a, (0.5, 1.0))
        assert np.max(np.abs(r.values)) <= 1e-12


def test_tanaka_level_below_range(mixed_path):
    # (x - a)^- vanishes on the path: both sides are just Gamma(M^{u,c}) noise
    a = mixed_path.values.min() - 1
    r = hz.tanaka_residual(mixed_path, fn.identity(), a)
    assert abs(r.final) <= 1e-12


def test_tanaka_brute_force_ten_steps():
    # hand-assembled oracle on a 10-step path with one jump
    spec = pm.brownian_jumps(1.0, 1.2)
    rng = np.random.default_rng(4)
    p = pm.assemble_path(spec, 0.1, 0.05, rng.normal(0, 0.3, 10), [6], [-0.4])
    a = 0.0
    x, c = p.values, p.cont_increments
    left = x[1:] - p.dense_jumps()[1:]
    ind = lambda z: (z <= a).astype(float)
    gam = 0.5 * np.sum((ind(left) - ind(x[:-1])) * c)
    neg = lambda z: np.maximum(a - z, 0.0)
    jump = neg(x[6]) - neg(left[5])
    rhs = neg(x[0]) - neg(x[-1]) - np.sum(ind(x[:-1]) * c) + jump
    assert hz.tanaka_residual(p, fn.identity(), a).final == pytest.approx(gam - rhs, abs=1e-14)


def test_martingale_test_calibration():
    rng = np.random.default_rng(0)
    assert hz.martingale_mean_test(np.zeros(50)).passed
    x = rng.normal(size=1000)
    assert hz.martingale_mean_test(x - x.mean()).passed
    assert not hz.martingale_mean_test(x - x.mean() + 0.5).passed
    with pytest.raises(ValueError):
        hz.martingale_mean_test(np.zeros(10))


def test_martingale_part_of_tanh_on_bm():
    ms = [hz.ito_assemble(pm.simulate_path(pm.brownian(), 1.0, 1e-3, s), fn.identity(),
                          fn.smooth("tanh")).m[-1] for s in range(400)]
    assert hz.martingale_mean_test(ms).passed


def test_trend_flag():
    assert hz.trend_decreasing([3, 2, 1])
    assert not hz.trend_decreasing([1, 2])
    assert hz.trend_decreasing([0, 1e-15, 0])
    assert hz.trend_decreasing([5, 4, 4.5, 3])
    assert not hz.trend_decreasing([5, 6, 7, 3])


def test_config_validation():
    with pytest.raises(hz.ConfigError):
        hz.ExperimentConfig(pm.brownian(), dts=(1e-3, 1e-2))
    with pytest.raises(hz.ConfigError):
        hz.ExperimentConfig(pm.brownian(), n_paths=1)
    with pytest.raises(hz.ConfigError):
        hz.ExperimentConfig(pm.brownian(), checkpoints=(2.0,))
    with pytest.raises(hz.ConfigError):
        hz.ExperimentConfig(pm.brownian(), start="warm")
    c = hz.ExperimentConfig(pm.brownian())
    assert c.checkpoint_times == (0.25, 0.5, 1.0)


def test_convergence_table_needs_two_dts():
    c = hz.ExperimentConfig(pm.brownian(), dts=(1e-2,), n_paths=5)
    with pytest.raises(hz.ConfigError, match="2 dt values"):
        hz.convergence_table(c, "tanaka")


def test_pure_jump_table_is_exact():
    c = hz.ExperimentConfig(STABLE, F=fn.smooth("tanh"), dts=(1e-3, 5e-4), n_paths=40)
    t = hz.convergence_table(c, "ito")
    assert t.passed and t.decreasing
    assert all(r.max_abs_residual <= 1e-12 for r in t.rows)


def test_tanaka_table_decreases_on_bm():
    c = hz.ExperimentConfig(pm.brownian(), dts=(1e-2, 1e-3), n_paths=200, checkpoints=(1.0,))
    t = hz.convergence_table(c, "tanaka")
    assert t.decreasing
    assert t.rows[1].mean_residual < t.rows[0].mean_residual


def test_rows_are_deterministic():
    c = hz.ExperimentConfig(pm.brownian(), F=fn.smooth("square"), dts=(1e-2,), n_paths=30, seed_base=9)
    assert hz.run_identity(c, "ito", 1e-2) == hz.run_identity(c, "ito", 1e-2)
    c2 = hz.with_overrides(c, workers=2)
    assert [r.mean_residual for r in hz.run_identity(c2, "ito", 1e-2)] == \
        [r.mean_residual for r in hz.run_identity(c, "ito", 1e-2)]


def test_unknown_identity():
    c = hz.ExperimentConfig(pm.brownian(), dts=(1e-2,), n_paths=5)
    with pytest.raises(hz.ConfigError):
        hz.run_identity(c, "girsanov", 1e-2)
    with pytest.raises(hz.ConfigError):
        hz.run_identity(c, "ito", 1e-2)


def test_stationary_start_matches_fixed_start():
    # signed residual means agree; mean |R| at fixed dt depends on where the
    # path lives and is not compared
    u, F = fn.identity(), fn.smooth("tanh")

    def residuals(start, base):
        return [hz.ito_assemble(hz.draw_path(pm.brownian(), 1.0, 1e-2, s, start), u, F).residual[-1]
                for s in montecarlo.path_seeds(base, 400)]
    a = montecarlo.summarize(residuals("fixed", 0))
    b = montecarlo.summarize(residuals("stationary", 10 ** 5))
    assert abs(a.mean - b.mean) <= 2 * math.hypot(a.se, b.se)


def test_draw_path_stationary_shift():
    p = hz.draw_path(pm.brownian(), 1.0, 1e-2, 3, "stationary", burn_in=0.5)
    long = pm.simulate_path(pm.brownian(), 1.5, 1e-2, 3)
    assert p.n == 100
    np.testing.assert_allclose(p.values, long.values[50:], atol=1e-12)


# -- two dimensions -------------------------------------------------------------

@pytest.fixture
def p2():
    return pm.simulate_path(pm.diffusion2d(), 1.0, 1e-3, 8)


def test_2d_constant_is_zero(p2):
    row = hz.multidim_ito_check(p2, fn.f2_constant(0.0))
    assert np.all(row.residual == 0)


def test_2d_sum_reduces_to_1d(p2):
    row = hz.multidim_ito_check(p2, fn.f2_sum(), (0.5, 1.0))
    assert np.max(np.abs(row.residual)) <= 1e-12


def test_2d_product_exact(p2):
    row = hz.multidim_ito_check(p2, fn.f2_product())
    assert np.max(np.abs(row.residual)) <= 1e-12


def test_2d_needs_2d_path(bm_path):
    with pytest.raises(hz.ConfigError):
        hz.multidim_ito_check(bm_path, fn.f2_sum())
    with pytest.raises(hz.ConfigError):
        hz.ito_assemble(pm.simulate_path(pm.diffusion2d(), 1.0, 1e-2, 1), fn.identity(), fn.identity())


def test_2d_product_q_mean_is_zero():
    qs = [hz.multidim_ito_check(pm.simulate_path(pm.diffusion2d(), 1.0, 1e-3, s), fn.f2_product()).q[-1]
          for s in range(300)]
    assert abs(np.mean(qs)) <= 0.05
