import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rssibeam.codebook import make_theta
from rssibeam.estimator import estimate_phases_batch
from rssibeam.model import ChannelVector, SystemParams, derive_pair_params, wrap_angle
from rssibeam.planner import (
    PlannerError,
    TimingParams,
    WpbParams,
    e_total,
    n_star,
    n_star_brute,
    noise_epsilon,
    omega_params,
    rwpb_approx,
    wpb_coefficients,
    wpb_params_for_channel,
)

omega1s = st.floats(0.1, 10)
omega2s = st.floats(0.0, 2.99)


@pytest.mark.parametrize(
    "alpha1, betas, pairs, eps, expected",
    [
        (1, [1], [], 0, (2, 0)),
        (1, [1], [], 1, (2, 0.25)),
        (1, [1, 1], [1], math.sqrt(2), (4, 0.5)),
    ],
)
def test_omega_examples(alpha1, betas, pairs, eps, expected):
    w = omega_params(alpha1, betas, pairs, eps)
    assert (w.omega1, w.omega2) == pytest.approx(expected)


def test_omega_rejects():
    with pytest.raises(ValueError):
        omega_params(0.0, [1], [], 1)
    with pytest.raises(ValueError):
        omega_params(1.0, [-1], [], 1)


def test_wpb_coefficients_k2_omega1():
    sys = SystemParams(1.0, 2.0)
    h = ChannelVector([2.0, 0.5j])
    a1, b, pairs = wpb_coefficients(h, sys)
    w = omega_params(a1, b, pairs, 0.0)
    assert pairs.size == 0 and w.omega1 == pytest.approx(a1 + b[0])
    # with exact phases the WPB stage sees (|h1| + |h2|)^2 P/K
    assert w.omega1 == pytest.approx(sys.power / 2 * 2.5**2)


def test_wpb_coefficients_full_energy(rng):
    sys = SystemParams(0.6, 4.0)
    for K in (3, 6):
        h = ChannelVector(rng.standard_normal(K) + 1j * rng.standard_normal(K))
        w = omega_params(*wpb_coefficients(h, sys), 0.0)
        assert w.omega1 == pytest.approx(sys.xi * sys.power / K * h.magnitudes.sum() ** 2)


@pytest.mark.parametrize("N", [1, 4, 100])
def test_rwpb_examples(N):
    assert rwpb_approx(WpbParams(2.0, 0.0), N) == 2.0
    assert rwpb_approx(WpbParams(2.0, 0.5), 4) == pytest.approx(1.75)
    assert rwpb_approx(WpbParams(2.0, 0.5), 1e12) == pytest.approx(2.0)


@given(omega1s, omega2s, st.integers(1, 1000))
def test_rwpb_increasing(o1, o2, N):
    w = WpbParams(o1, o2)
    assert rwpb_approx(w, N + 1) >= rwpb_approx(w, N)


def test_e_total_examples():
    t = TimingParams(T=100, tau_kn=1, E_f=0, K=2)
    assert e_total(WpbParams(1, 1), t, 10) == pytest.approx(81.0)
    N = np.arange(1, 99)
    vals = e_total(WpbParams(2, 0), t, N)
    np.testing.assert_allclose(vals, 2 * (100 - N))
    assert np.all(np.diff(vals) < 0)
    with pytest.raises(PlannerError, match="infeasible"):
        e_total(WpbParams(1, 1), t, 100)


@given(omega1s, omega2s, st.floats(10, 500), st.floats(0.1, 2), st.floats(0, 3), st.integers(2, 6))
def test_e_total_concave(o1, o2, T, tau, Ef, K):
    t = TimingParams(T, tau, Ef, K)
    n_max = t.max_feasible_n()
    if n_max < 3:
        return
    N = np.arange(1, n_max + 1)
    v = e_total(WpbParams(o1, o2), t, N)
    assert np.all(v[:-2] + v[2:] <= 2 * v[1:-1] + 1e-9 * np.abs(v).max())


def test_timing_bounds_fig_setting():
    t = TimingParams(T=100, tau_kn=1, K=2)
    assert (3, math.floor(t.upper_bound())) == (3, 17)
    assert t.max_feasible_n() == 99


def test_n_star_zero_penalty():
    t = TimingParams(T=100, K=2)
    ns = n_star(WpbParams(2.0, 0.0), t)
    assert ns.analytic == 0.0 and ns.clamped == 3 and ns.integer == 3
    assert n_star_brute(WpbParams(2.0, 0.0), t) == 3


@given(omega1s, omega2s, st.floats(20, 400), st.floats(0.2, 2), st.floats(0, 5), st.integers(2, 5))
def test_n_star_formula_and_brute_force(o1, o2, T, tau, Ef, K):
    w, t = WpbParams(o1, o2), TimingParams(T, tau, Ef, K)
    try:
        ns = n_star(w, t)
    except PlannerError:
        return
    psi = o1 * o2 * tau / (o1 * tau + Ef)
    assert ns.analytic == pytest.approx(math.sqrt(psi * T / ((K - 1) * tau)), rel=1e-12)
    assert 3 <= ns.clamped <= t.upper_bound()
    nb = n_star_brute(w, t)
    assert abs(ns.integer - nb) <= 1
    assert 3 <= nb <= t.upper_bound()
    for m in (nb - 1, nb + 1):
        if 3 <= m <= t.max_feasible_n():
            assert e_total(w, t, nb) >= e_total(w, t, m)


def test_n_star_block_too_short():
    with pytest.raises(PlannerError, match="block too short to harvest"):
        n_star(WpbParams(1.0, 0.1), TimingParams(T=10, tau_kn=1, E_f=100, K=2))
    with pytest.raises(PlannerError):
        n_star_brute(WpbParams(1.0, 0.1), TimingParams(T=3, K=2))


def test_noise_epsilon_matches_bound():
    assert noise_epsilon(0.01, [1.0]) == pytest.approx(math.sqrt(2) * 0.1)
    with pytest.raises(ValueError):
        noise_epsilon(0.01, [0.0])


@pytest.mark.parametrize("sigma2", [1e-3, 1e-2])
@pytest.mark.parametrize("N", [3, 4, 8])
def test_epsilon_calibration_against_monte_carlo(sigma2, N):
    # K = 2, unit gains, P = 2: beta = 1 so sigma^2 / beta^2 = sigma2
    sys = SystemParams(1.0, 2.0)
    g = np.random.default_rng(100 + N)
    phi = g.uniform(-np.pi, np.pi, 40_000)
    p = derive_pair_params(1.0, np.exp(1j * 0.3), sys)
    w = wpb_params_for_channel(ChannelVector([1.0, np.exp(0.3j)]), sys, sigma2)
    t = make_theta(N).thetas
    R = p.alpha + p.beta * np.cos(t + phi[:, None]) + math.sqrt(sigma2) * g.standard_normal((phi.size, N))
    err = wrap_angle(estimate_phases_batch(R)[0] - phi)
    mc_loss = np.mean(1 - (1 + np.cos(err)) / 2)
    assert mc_loss == pytest.approx(w.omega2 / N, rel=0.2)
