import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cimpl.cimp import (
    ImpdEstimator,
    ambiguity_bin,
    dispersion,
    estimate_impd,
    instantaneous_impd,
    mapped_phasor,
    resultant_from_dispersion,
    update_circular_mean,
    usable_bins,
    wrap_angle,
    wrapped_normal_variance,
)
from cimpl.geometry import ArrayGeometry, PairId


def circ_diff(a, b):
    return np.abs(wrap_angle(np.asarray(a) - np.asarray(b)))


def batch_mean(z, axis=0):
    """Cumulative mean via the recursive update with lambda = 1 / n."""
    acc = np.zeros(np.asarray(z).shape[1:], dtype=complex)
    for n, zn in enumerate(z, start=1):
        acc, theta, R = update_circular_mean(acc, zn, 1.0 / n)
    return theta, R


# --- instantaneous IMPD --------------------------------------------------

def test_impd_identity_and_quarter_turn():
    z, ok = instantaneous_impd(1.0, 1.0)
    assert ok and np.angle(z) == 0.0
    z, ok = instantaneous_impd(1j, 1.0)
    assert ok and np.angle(z) == pytest.approx(np.pi / 2, abs=1e-15)


def test_impd_matches_argument_difference(rng):
    xa = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    xb = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    z, ok = instantaneous_impd(xa, xb)
    assert ok.all()
    np.testing.assert_allclose(np.abs(z), 1.0, atol=1e-12)
    oracle = wrap_angle(np.arctan2(xa.imag, xa.real) - np.arctan2(xb.imag, xb.real))
    assert np.max(circ_diff(np.angle(z), oracle)) < 1e-12


def test_impd_dead_bins_flagged():
    z, ok = instantaneous_impd(np.array([0.0, 1e-13, 1.0]), np.array([1.0, 1.0, 0.0]))
    assert not ok.any()
    assert not np.any(z)


@settings(max_examples=200, deadline=None)
@given(
    st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False),
    st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False),
    st.floats(1e-3, 1e3),
    st.floats(1e-3, 1e3),
)
def test_impd_scale_invariant(xa, xb, sa, sb):
    z0, _ = instantaneous_impd(xa, xb)
    z1, _ = instantaneous_impd(sa * xa, sb * xb)
    assert abs(z1 - z0) < 1e-12


# --- circular mean -------------------------------------------------------

def test_constant_phasor_converges():
    acc = 0j
    for _ in range(300):
        acc, theta, R = update_circular_mean(acc, 1.0 + 0j, 0.1)
    assert theta == pytest.approx(0.0, abs=1e-12)
    assert R == pytest.approx(1.0, abs=1e-12)


def test_symmetric_triplet_cancels():
    z = np.exp(1j * np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3] * 1000))
    _, R = batch_mean(z)
    assert R < 1e-12


def test_wrapped_normal_batch_mean(rng):
    sigma = 0.5
    theta = wrap_angle(rng.normal(0.3, sigma, 10_000))
    _, R = batch_mean(np.exp(1j * theta))
    assert R == pytest.approx(np.exp(-sigma ** 2 / 2), abs=0.01)
    assert np.exp(-sigma ** 2 / 2) == pytest.approx(0.8825, abs=1e-4)


def test_recursive_mean_floor_for_uniform_phases(rng):
    # steady-state |acc|^2 = lam / (2 - lam) for i.i.d. uniform phasors; the
    # accumulator is near complex Gaussian so E[R] is the Rayleigh mean
    lam = 0.1
    z = np.exp(1j * rng.uniform(-np.pi, np.pi, size=(4000, 200)))
    acc = np.zeros(200, dtype=complex)
    Rs = []
    for frame in z:
        acc, _, R = update_circular_mean(acc, frame, lam)
        Rs.append(R)
    floor = np.mean(Rs[200:])
    assert floor == pytest.approx(np.sqrt(np.pi * lam / (4 * (2 - lam))), rel=0.02)
    assert floor > 0.2


def test_smoothing_factor_validated():
    with pytest.raises(ValueError):
        update_circular_mean(0j, 1.0, 0.0)
    with pytest.raises(ValueError):
        update_circular_mean(0j, 1.0, 1.5)


# --- mapped resultant length --------------------------------------------

def test_mapped_R_deterministic_phase():
    k = np.arange(1, 8)
    theta = 2 * np.pi * k * 125.0 * 200e-6  # fixed delay, constant over frames
    z = np.tile(np.exp(1j * theta), (200, 1))
    acc = np.zeros(7, complex)
    for zl in mapped_phasor(z, k, 8):
        acc, _, R = update_circular_mean(acc, zl, 0.1)
    assert np.all(R > 1 - 1e-9)


@pytest.mark.parametrize("f_u, fs, K", [(1000.0, 16000.0, 64), (343.0 / 0.024, 16000.0, 64)])
def test_mapped_R_diffuse_model(rng, f_u, fs, K):
    """IMPD uniform on +-pi f / f_u at each bin: mapped R vanishes below k_u."""
    k_u = ambiguity_bin(K, f_u, fs)
    k = usable_bins(k_u, K)
    f = k * fs / (2 * K)
    n = 10_000
    theta = rng.uniform(-1.0, 1.0, (n, len(k))) * np.pi * f / f_u
    zm = mapped_phasor(np.exp(1j * theta), k, k_u)
    R_mapped = np.abs(zm.mean(axis=0))
    assert np.all(R_mapped < 0.05)


def test_unmapped_R_diffuse_near_one_at_low_frequency(rng):
    ratio = 0.1  # f = f_u / 10
    density_mean, _ = integrate.quad(lambda t: np.cos(t) / (2 * np.pi * ratio), -np.pi * ratio, np.pi * ratio)
    assert density_mean == pytest.approx(0.9836, abs=1e-4)
    theta = rng.uniform(-np.pi * ratio, np.pi * ratio, 10_000)
    _, R = batch_mean(np.exp(1j * theta))
    assert R == pytest.approx(density_mean, abs=0.005)


def test_mapped_R_in_unit_interval(rng):
    K, k_u = 64, 40
    k = usable_bins(k_u, K)
    xa = rng.normal(size=(1000, 65)) + 1j * rng.normal(size=(1000, 65))
    xb = rng.normal(size=(1000, 65)) + 1j * rng.normal(size=(1000, 65))
    xa[rng.random(xa.shape) < 0.05] = 0
    stats = estimate_impd(xa, xb, PairId.BINAURAL, k_u, 125.0, 0.1)
    assert stats.mapped_R.size == 1000 * len(k) > 10 ** 4
    assert np.all((stats.mapped_R >= 0) & (stats.mapped_R <= 1))
    assert np.all((stats.mean_impd >= -np.pi) & (stats.mean_impd < np.pi))


def test_streaming_matches_vectorised(rng):
    xa = rng.normal(size=(50, 65)) + 1j * rng.normal(size=(50, 65))
    xb = rng.normal(size=(50, 65)) + 1j * rng.normal(size=(50, 65))
    stats = estimate_impd(xa, xb, PairId.LEFT_MONAURAL, 30, 125.0, 0.2)
    est = ImpdEstimator(PairId.LEFT_MONAURAL, 30, 64, 0.2)
    for l in range(50):
        theta, R, d = est.update(xa[l], xb[l])
        np.testing.assert_allclose(theta, stats.mean_impd[l], atol=1e-12)
        np.testing.assert_allclose(R, stats.mapped_R[l], atol=1e-12)
        np.testing.assert_allclose(d, stats.dispersion[l], rtol=1e-9)


def test_swapping_microphones(rng):
    xa = rng.normal(size=(80, 65)) + 1j * rng.normal(size=(80, 65))
    xb = xa * np.exp(1j * rng.normal(0.2, 0.4, (80, 65)))
    ab = estimate_impd(xa, xb, PairId.BINAURAL, 20, 125.0, 0.1)
    ba = estimate_impd(xb, xa, PairId.BINAURAL, 20, 125.0, 0.1)
    assert np.max(circ_diff(ba.mean_impd, -ab.mean_impd)) < 1e-12
    np.testing.assert_allclose(ba.mapped_R, ab.mapped_R, atol=1e-12)
    np.testing.assert_allclose(ba.dispersion, ab.dispersion, rtol=1e-9)


def test_ambiguity_bin_default_geometry():
    g = ArrayGeometry()
    assert ambiguity_bin(64, g.ambiguity_frequency(PairId.BINAURAL), 16000.0) == 8
    assert ambiguity_bin(64, g.ambiguity_frequency(PairId.LEFT_MONAURAL), 16000.0) == 114


# --- dispersion and variance ---------------------------------------------

def test_dispersion_values():
    assert dispersion(1.0) == 0.0
    assert dispersion(0.5) == pytest.approx(1.875, rel=1e-12)
    # (1 - 0.9**4) / (2 * 0.9**2) = 0.3439 / 1.62
    assert dispersion(0.9) == pytest.approx(0.3439 / 1.62, rel=1e-12)
    assert dispersion(0.9) == pytest.approx(0.212284, abs=1e-6)
    assert math.isinf(dispersion(1e-4)) and math.isinf(dispersion(0.0))


def test_wrapped_normal_variance_values():
    assert wrapped_normal_variance(1.0) == 0.0
    assert wrapped_normal_variance(np.exp(-0.5)) == pytest.approx(1.0, rel=1e-12)
    assert math.isinf(wrapped_normal_variance(5e-5))


def test_dispersion_penalises_low_R_more():
    assert wrapped_normal_variance(0.3) == pytest.approx(2.408, abs=5e-4)
    assert dispersion(0.3) == pytest.approx(5.511, abs=5e-4)
    assert dispersion(0.3) > wrapped_normal_variance(0.3)


def test_monotone_decreasing():
    R = np.linspace(0.01, 1.0, 2000)
    assert np.all(np.diff(dispersion(R)) < 0)
    assert np.all(np.diff(wrapped_normal_variance(R)) < 0)


def test_dispersion_round_trip():
    R = np.linspace(0.05, 1.0, 1000)
    np.testing.assert_allclose(resultant_from_dispersion(dispersion(R)), R, rtol=0, atol=1e-12)
