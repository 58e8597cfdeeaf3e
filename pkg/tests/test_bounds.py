import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftrlm.bounds import (BoundInputs, bound_fixed_schedule, bound_adaptive_global, bound_adaptive_coordinate, bound_smooth, bound_last_iterate,
                          ftrl_regret_gap, power_sum_check, power_sum_grid, gradient_gap_check, increment_sum_check,
                          mean_within_bound, o2b_gap_audit, o2b_trace)
from ftrlm.errors import ConfigurationError
from ftrlm.problems import SquaredHinge, full_objective, full_subgradient, synth_separable


# --- closed-form bounds ------------------------------------------------------


def test_fixed_schedule_value():
    assert bound_fixed_schedule(BoundInputs(dist0=1, G=1, c=1, T=100)) == pytest.approx(0.3, rel=1e-15)


def test_fixed_schedule_structure():
    base = BoundInputs(dist0=2, G=1.5, c=0.5, T=100)
    doubled = BoundInputs(dist0=2, G=1.5, c=1.0, T=100)
    first = lambda b: b.dist0**2 * b.G / (b.c * math.sqrt(b.T))
    assert first(doubled) == pytest.approx(first(base) / 2)
    assert bound_fixed_schedule(doubled) - first(doubled) == pytest.approx(2 * (bound_fixed_schedule(base) - first(base)))
    far = BoundInputs(dist0=2, G=1.5, c=0.5, T=10_000)
    assert bound_fixed_schedule(far) == pytest.approx(bound_fixed_schedule(base) / 10, rel=1e-14)


def test_adaptive_global_values():
    inp = BoundInputs(dist0=1, alpha_scale=1, eps=1, G=1, T=4)
    assert bound_adaptive_global(inp, 3.0) == pytest.approx(1.75)
    zero = BoundInputs(dist0=2, alpha_scale=0.5, eps=0.25, G=3, T=7)
    assert bound_adaptive_global(zero, 0.0) == pytest.approx((zero.C * 0.5 + 0.5 * 9 / 0.5) / 7)


def test_adaptive_global_grows_like_root_t_when_gradients_constant():
    vals = [bound_adaptive_global(BoundInputs(dist0=1, G=2, T=T), T * 4.0) * math.sqrt(T) for T in (10**4, 10**6, 10**8)]
    assert vals[-1] == pytest.approx(vals[-2], rel=1e-2)


def test_adaptive_coordinate_values():
    inp = BoundInputs(dist0=1, alpha_scale=1, eps=1, G_inf=1, T=4)
    assert bound_adaptive_coordinate(inp, [3.0, 0.0]) == pytest.approx(2.75)
    one = BoundInputs(dist0=1.5, alpha_scale=0.7, eps=0.3, G=2.0, G_inf=2.0, T=9)
    assert bound_adaptive_coordinate(one, [5.0]) == pytest.approx(bound_adaptive_global(one, 5.0), rel=1e-14)


def test_bounds_reject_bad_inputs():
    with pytest.raises(ConfigurationError):
        BoundInputs(T=0)
    with pytest.raises(ConfigurationError):
        BoundInputs(G=-1)
    with pytest.raises(ConfigurationError):
        bound_adaptive_global(BoundInputs(eps=0.0), 1.0)
    with pytest.raises(ConfigurationError):
        bound_smooth(BoundInputs(), variant="other")


def smooth_reference(dist0, a, L, eps, G, sigma, T):
    """Second, term-by-term evaluation of the smooth-case bound."""
    C = dist0 * dist0 / a + 2 * a
    lnT = math.log(T)
    under = eps + 4 * (L * C * lnT) ** 2 + 4 * L * C * lnT * eps**0.5 + 2 * a * G * G / eps**0.5
    return C / T * (under**0.5 + a * G * G / eps**0.5) + 2**0.5 * C * sigma / T**0.5


def test_smooth_matches_reference():
    inp = BoundInputs(dist0=1, alpha_scale=1, L_smooth=1, eps=1, G=1, sigma=1, T=math.e**2)
    assert bound_smooth(inp) == pytest.approx(smooth_reference(1, 1, 1, 1, 1, 1, math.e**2), rel=1e-12)


def test_smooth_variants():
    inp = BoundInputs(dist0=0.5, alpha_scale=2, L_smooth=3, eps=0.1, G=1.2, sigma=0.0, T=50)
    assert bound_smooth(inp, "noisy") == bound_smooth(inp, "noiseless")
    degenerate = BoundInputs(dist0=1, alpha_scale=1, L_smooth=0, eps=1, G=0, T=10)
    assert bound_smooth(degenerate, "noiseless") == pytest.approx(degenerate.C / 10)


@settings(max_examples=100, deadline=None)
@given(dist0=st.floats(0, 10), a=st.floats(0.01, 10), L=st.floats(0, 10), eps=st.floats(1e-6, 10),
       G=st.floats(0, 10), sigma=st.floats(0, 10), T=st.integers(1, 10**6))
def test_smooth_reference_property(dist0, a, L, eps, G, sigma, T):
    inp = BoundInputs(dist0=dist0, alpha_scale=a, L_smooth=L, eps=eps, G=G, sigma=sigma, T=T)
    assert bound_smooth(inp) == pytest.approx(smooth_reference(dist0, a, L, eps, G, sigma, T), rel=1e-12)


def test_last_iterate_bound_scalar():
    # T = 2, gamma = 0.5 constant: (||x1-x*||^2/0.5 + 0.5*(1 + 4)) / 2
    assert bound_last_iterate([0.0], [1.0], [0.5, 0.5], [[1.0], [2.0]]) == pytest.approx((2.0 + 2.5) / 2)


# --- regret ------------------------------------------------------------------


def test_regret_zero_gradients():
    regret, bound = ftrl_regret_gap([np.zeros(2)] * 5, [1 / np.sqrt(t) for t in range(1, 6)],
                                    u=[1.0, 2.0], x1=[0.0, 0.0])
    assert regret == 0.0
    assert bound == pytest.approx(5.0 / (1 / np.sqrt(5)))


def test_regret_single_step_at_start():
    regret, bound = ftrl_regret_gap([np.array([3.0, -1.0])], [0.5], u=[0.2, 0.4], x1=[0.2, 0.4])
    assert regret == 0.0 and bound >= 0.0


def test_regret_matches_explicit_sum():
    rng = np.random.default_rng(2)
    grads = rng.normal(size=(20, 3))
    gammas = [0.3 / np.sqrt(t) for t in range(1, 21)]
    u, x1 = rng.normal(size=3), rng.normal(size=3)
    regret, bound = ftrl_regret_gap(grads, gammas, u, x1)
    ref = 0.0
    for t in range(20):
        w = x1 - gammas[t] * grads[:t].sum(axis=0)
        ref += grads[t] @ (w - u)
    assert regret == pytest.approx(ref, rel=1e-12)
    assert regret <= bound


def test_regret_rejects_increasing_gamma():
    with pytest.raises(ConfigurationError):
        ftrl_regret_gap([np.ones(1)] * 2, [0.5, 1.0], u=[0.0])
    with pytest.raises(ConfigurationError):
        ftrl_regret_gap([np.ones(1)] * 2, [0.5], u=[0.0])


def test_regret_check_passes_on_valid_stream():
    grads = [np.array([1.0, -1.0])] * 3
    regret, bound = ftrl_regret_gap(grads, [1.0, 0.5, 0.25], u=[-2.0, 2.0], check=True)
    assert regret <= bound


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), T=st.integers(1, 80), d=st.integers(1, 5))
def test_regret_property(seed, T, d):
    rng = np.random.default_rng(seed)
    grads = rng.normal(size=(T, d)) * rng.exponential(size=(T, 1))
    gammas = np.minimum.accumulate(rng.uniform(0.01, 2.0, size=(T, d)), axis=0)
    weights = rng.uniform(0.1, 2.0, size=T)
    regret, bound = ftrl_regret_gap(grads, list(gammas), rng.normal(size=d) * 3, rng.normal(size=d), weights)
    assert regret <= bound + 1e-9


# --- online-to-batch ---------------------------------------------------------


def test_o2b_constant_function():
    tr = o2b_trace(lambda x, t: np.zeros(2), lambda x: 3.0, np.zeros(2), lambda t: 1 / np.sqrt(t), 10,
                   u=np.ones(2))
    assert np.all(tr.regrets == 0.0)
    for t in range(10):
        assert o2b_gap_audit(tr.values[t], tr.regrets[t], np.ones(t + 1), 3.0)


def test_o2b_absolute_value():
    tr = o2b_trace(lambda x, t: np.sign(x), lambda x: float(np.abs(x).sum()), np.array([2.0]),
                   lambda t: 1 / np.sqrt(t + 1), 100, u=np.zeros(1))
    for t in range(100):
        assert o2b_gap_audit(tr.values[t], tr.regrets[t], np.ones(t + 1), 0.0)


def test_o2b_separable_squared_hinge():
    data = synth_separable(60, 5, 0.5, seed=3)
    kind = SquaredHinge()
    L = data.meta.L_smooth
    tr = o2b_trace(lambda x, t: full_subgradient(kind, x, data), lambda x: full_objective(kind, x, data),
                   np.zeros(5), lambda t: 1.0 / (4 * L), 200, u=data.meta.w_star)
    for t in range(200):
        assert o2b_gap_audit(tr.values[t], tr.regrets[t], np.ones(t + 1), 0.0)
    assert tr.values[-1] < tr.values[0]


def test_o2b_audit_needs_f_star():
    with pytest.raises(ConfigurationError):
        o2b_gap_audit(1.0, 1.0, [1.0], None)


def test_mean_within_bound():
    assert mean_within_bound([1.0, 1.2, 0.8], 1.0)
    assert not mean_within_bound([2.0, 2.0, 2.0], 1.0)


# --- auxiliary inequalities --------------------------------------------------


def test_power_sum_cases():
    assert power_sum_check(3, 3, 5, 0.5)
    lhs = (2**-0.5 + 3**-0.5 + 4**-0.5) / 4
    assert lhs == pytest.approx(0.4461, abs=1e-4)
    assert power_sum_check(1, 4, 4, 0.5)
    with pytest.raises(ConfigurationError):
        power_sum_check(3, 2, 5, 0.5)
    with pytest.raises(ConfigurationError):
        power_sum_check(1, 2, 5, 0.7)


def test_power_sum_grid_agrees_with_pointwise():
    for alpha in (0.1, 0.5):
        pointwise = sum(not power_sum_check(j, t, T, alpha)
                        for T in range(1, 25) for j in range(1, T + 1) for t in range(j, T + 1))
        assert pointwise == power_sum_grid(24, [alpha]) == 0


def test_gradient_gap_quadratic():
    f, grad = (lambda x: float(x @ x)), (lambda x: 2 * x)
    assert gradient_gap_check(f, grad, 2.0, 0.0, [np.array([1.0]), np.array([0.0])])
    assert not gradient_gap_check(f, grad, 1.0, 0.0, [np.array([1.0])])


def test_gradient_gap_squared_hinge():
    data = synth_separable(50, 8, 0.2, seed=5)
    kind = SquaredHinge()
    pts = np.random.default_rng(1).normal(size=(200, 8)) * 3
    assert gradient_gap_check(lambda w: full_objective(kind, w, data), lambda w: full_subgradient(kind, w, data),
                        data.meta.L_smooth, 0.0, pts)


def test_increment_sum_cases():
    lhs = 1 + 2**-0.5 + 3**-0.5
    assert lhs == pytest.approx(2.2845, abs=1e-4)
    assert increment_sum_check(1.0, [1.0, 1.0, 1.0], 1.0)
    assert increment_sum_check(0.5, [0.0, 0.0], 1.0)
    with pytest.raises(ConfigurationError):
        increment_sum_check(0.0, [1.0], 1.0)
    with pytest.raises(ConfigurationError):
        increment_sum_check(1.0, [2.0], 1.0)


def test_increment_sum_numeric_integral():
    f = lambda u: 1.0 / u
    assert increment_sum_check(1.0, [0.5, 1.0, 0.2], 1.0, f=f)
    assert increment_sum_check(1.0, [0.5, 1.0, 0.2], 1.0, f=f, antiderivative=math.log)
