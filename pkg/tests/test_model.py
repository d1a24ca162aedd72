import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rssibeam.codebook import make_codebook
from rssibeam.model import (
    ChannelVector,
    SystemParams,
    derive_pair_params,
    egt_beam_vector,
    received_energy,
    sample_channel,
    wrap_angle,
)
from rssibeam.rng import stream

angles = st.floats(-50.0, 50.0, allow_nan=False)
mags = st.floats(0.0, 5.0, allow_nan=False)


# -- derive_pair_params -----------------------------------------------------


def test_pair_params_equal_unit_gains():
    p = derive_pair_params(1.0, 1.0, SystemParams(1.0, 2.0))
    assert (p.alpha, p.beta, p.phi) == (1.0, 1.0, 0.0)


def test_pair_params_absent_second_channel():
    p = derive_pair_params(1.0, 0.0, SystemParams(1.0, 4.0))
    assert (p.alpha, p.beta, p.phi) == (1.0, 0.0, 0.0)


def test_pair_params_hand_computed():
    # beta = xi P/2 |h_i||h_j| = 0.5 * 4 / 2 * 2 * 1 = 2
    h_i = 2 * np.exp(1j * np.pi / 3)
    h_j = np.exp(1j * np.pi / 2)
    p = derive_pair_params(h_i, h_j, SystemParams(0.5, 4.0))
    assert p.alpha == pytest.approx(2.5)
    assert p.beta == pytest.approx(2.0)
    assert p.phi == pytest.approx(np.pi / 6)


@given(mags, mags, angles, angles, angles)
def test_pair_params_invariants(a1, a2, d1, d2, rot):
    sys = SystemParams(0.7, 3.0)
    h1, h2 = a1 * np.exp(1j * d1), a2 * np.exp(1j * d2)
    p = derive_pair_params(h1, h2, sys)
    assert p.alpha >= p.beta >= 0
    assert -np.pi < p.phi <= np.pi
    c = sys.xi * sys.power / 4
    assert p.alpha**2 - p.beta**2 == pytest.approx(c**2 * (a1**2 - a2**2) ** 2, rel=1e-9, abs=1e-9)
    # a common rotation of both gains changes nothing
    q = derive_pair_params(h1 * np.exp(1j * rot), h2 * np.exp(1j * rot), sys)
    assert q.alpha == pytest.approx(p.alpha) and q.beta == pytest.approx(p.beta)
    if p.beta > 1e-6:
        assert abs(wrap_angle(q.phi - p.phi)) < 1e-9


# -- received_energy --------------------------------------------------------


def test_received_energy_coherent_pair():
    assert received_energy([1, 1], np.sqrt(0.5) * np.array([1, 1])) == pytest.approx(2.0)


def test_received_energy_orthogonal_is_zero():
    h = np.array([1.0, 1j])
    w = np.array([1.0, 1j])  # h^T w = 1 + j^2 = 0
    assert received_energy(h, w) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("phi", [0.3, -2.0, np.pi])
@pytest.mark.parametrize("P", [1.0, 2.0, 5.0])
def test_received_energy_phase_compensated(phi, P):
    h = ChannelVector([1.0, np.exp(1j * phi)])
    w = egt_beam_vector([phi], SystemParams(1.0, P))
    assert received_energy(h, w) == pytest.approx(2 * P)


def test_received_energy_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        received_energy([1, 1, 1], [1, 1])


@given(st.lists(st.tuples(mags, angles), min_size=2, max_size=6), st.floats(0.01, 1.0))
def test_received_energy_non_negative(hs, xi):
    h = [m * np.exp(1j * d) for m, d in hs]
    w = np.exp(1j * np.arange(len(h)))
    assert received_energy(h, w, xi) >= 0


def test_codebook_energy_is_twice_pair_model(rng):
    # direct evaluation of the rank-one covariance with b_n = sqrt(P/2)[1, e^{j theta}]
    # gives exactly twice alpha + beta cos(theta + phi); the ratio is recorded here
    sys = SystemParams(0.8, 3.0)
    ratios = []
    for _ in range(200):
        h = ChannelVector(rng.standard_normal(2) + 1j * rng.standard_normal(2))
        p = derive_pair_params(*h.gains, sys)
        theta = rng.uniform(0, 2 * np.pi, 5)
        cb = make_codebook(theta, sys.power)
        for t, b in zip(theta, cb.vectors):
            ratios.append(received_energy(h, b, sys.xi) / p.rssi(t))
    np.testing.assert_allclose(ratios, 2.0, rtol=1e-9)


@given(st.lists(st.tuples(st.floats(0.05, 3.0), angles), min_size=2, max_size=6), st.data())
def test_true_phases_maximize_egt_energy(hs, data):
    h = ChannelVector([m * np.exp(1j * d) for m, d in hs])
    sys = SystemParams(1.0, 2.0)
    best = received_energy(h, egt_beam_vector(h.phase_differences(), sys))
    other = data.draw(st.lists(angles, min_size=h.K - 1, max_size=h.K - 1))
    assert received_energy(h, egt_beam_vector(other, sys)) <= best * (1 + 1e-12)


# -- egt_beam_vector --------------------------------------------------------


def test_egt_examples():
    np.testing.assert_allclose(egt_beam_vector([0.0], SystemParams(1, 2)).weights, [1, 1])
    np.testing.assert_allclose(egt_beam_vector([np.pi], SystemParams(1, 2)).weights, [1, -1], atol=1e-15)
    np.testing.assert_allclose(
        egt_beam_vector([np.pi / 2, np.pi], SystemParams(1, 3)).weights, [1, -1j, -1], atol=1e-15
    )


def test_egt_empty_rejected():
    with pytest.raises(ValueError):
        egt_beam_vector([], SystemParams())


@given(st.lists(angles, min_size=1, max_size=9), st.floats(0.1, 10.0))
def test_egt_equal_gain(phases, P):
    w = egt_beam_vector(phases, SystemParams(1.0, P)).weights
    np.testing.assert_allclose(np.abs(w), math.sqrt(P / w.size))
    assert np.angle(w[0]) == 0
    assert np.sum(np.abs(w) ** 2) == pytest.approx(P)


# -- wrap_angle -------------------------------------------------------------


@pytest.mark.parametrize("x, expected", [(0.0, 0.0), (2 * np.pi, 0.0), (-1.5 * np.pi, np.pi / 2), (-np.pi, np.pi)])
def test_wrap_examples(x, expected):
    assert wrap_angle(x) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_wrap_range_and_congruence(x):
    y = wrap_angle(x)
    assert -np.pi < y <= np.pi
    k = (x - y) / (2 * np.pi)
    assert abs(k - round(k)) < 1e-6


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_wrap_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        wrap_angle(bad)


# -- validation and sampling ------------------------------------------------


@pytest.mark.parametrize("xi, P", [(0.0, 1.0), (1.5, 1.0), (0.5, 0.0), (0.5, -1.0)])
def test_system_params_validation(xi, P):
    with pytest.raises(ValueError):
        SystemParams(xi, P)


def test_channel_needs_two_antennas():
    with pytest.raises(ValueError):
        ChannelVector([1.0])


def test_channel_phases_wrapped():
    h = ChannelVector.from_polar([1, 2], [3 * np.pi, -np.pi / 2])
    assert np.all(h.phases > -np.pi) and np.all(h.phases <= np.pi)


def test_sample_fixed():
    g = [1.0, np.exp(1j * np.pi / 4)]
    np.testing.assert_array_equal(sample_channel("fixed", 2, gains=g).gains, np.array(g))


def test_sample_unit_reproducible():
    a = sample_channel("unit", 2, stream(5, 1, 0))
    b = sample_channel("unit", 2, stream(5, 1, 0))
    np.testing.assert_array_equal(a.gains, b.gains)
    np.testing.assert_allclose(np.abs(a.gains), 1.0)


def test_sample_rayleigh_power():
    g = np.random.default_rng(1)
    draws = np.stack([sample_channel("rayleigh", 10, g, scale=2.5).gains for _ in range(10_000)])
    np.testing.assert_allclose(np.mean(np.abs(draws) ** 2, axis=0), 2.5, rtol=0.02 * 3)
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(2.5, rel=0.02)


def test_sample_unknown_model():
    with pytest.raises(ValueError, match="unknown"):
        sample_channel("rician", 2, stream(0, 1, 0))
