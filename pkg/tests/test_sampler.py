import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moments import sampler
from moments.errors import PoleError
from moments.exact import abs_lambda_moment
from moments.sampler import EigenAngles, MomentSpec, estimate_moment

angles = st.lists(st.floats(0, 2 * math.pi, exclude_max=True), min_size=1, max_size=8)


def sorted_phases(values):
    return np.sort(np.mod(values, 2 * np.pi))


def test_sampling_is_deterministic():
    a = sampler.sample_eigenangles(5, 42).angles
    b = sampler.sample_eigenangles(5, 42).angles
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sampler.sample_eigenangles(5, 43).angles)


def test_haar_unitaries_are_unitary():
    rng = np.random.default_rng(0)
    u = sampler.haar_unitaries(rng, 6, 4)
    eye = np.eye(6)
    for m in u:
        assert np.allclose(m.conj().T @ m, eye, atol=1e-12)


def test_eigenangles_match_eigvals():
    rng = np.random.default_rng(1)
    u = sampler.haar_unitaries(rng, 8, 20)
    theta = sampler.unitary_eigenangles(u)
    for m, t in zip(u, theta):
        ref = np.angle(np.linalg.eigvals(m))
        assert np.allclose(sorted_phases(t), sorted_phases(ref), atol=1e-9)


def test_eigenangles_with_eigenvalue_at_minus_one():
    q, _ = np.linalg.qr(np.random.default_rng(2).normal(size=(4, 4)))
    d = np.diag(np.exp(1j * np.array([np.pi, 0.3, -1.2, 2.0])))
    u = (q @ d @ q.T)[None]
    theta = sampler.unitary_eigenangles(u)[0]
    assert np.allclose(sorted_phases(theta), sorted_phases([np.pi, 0.3, -1.2, 2.0]), atol=1e-9)


def test_u1_uniformity():
    theta = sampler.sample_angle_block(1, 100_000, 7)[:, 0]
    z = np.exp(1j * theta)
    err = 1 / math.sqrt(2 * len(z))
    assert abs(z.real.mean()) < 3 * err * math.sqrt(2)
    assert abs(z.imag.mean()) < 3 * err * math.sqrt(2)


def test_trace_diagnostics():
    stats = sampler.trace_statistics(20, 20_000, 5)
    for name, target in (("re", 0.0), ("im", 0.0), ("abs2", 1.0)):
        mean, se = stats[name]
        assert abs(mean - target) < 4 * se


def test_lambda_examples():
    assert sampler.lambda_at([0.0, 0.0], 0.5) == pytest.approx(0.25)
    assert sampler.lambda_at([math.pi], 1) == pytest.approx(2)
    assert abs(sampler.lambda_at([math.pi / 2], 1j)) < 1e-15


def test_log_derivative_examples():
    assert sampler.lambda_log_derivative([0.0], 0.5) == pytest.approx(-2)
    assert sampler.lambda_log_derivative([0.0] * 3, 0.25) == pytest.approx(-3 / 0.75)
    with pytest.raises(PoleError):
        sampler.lambda_log_derivative([0.0], 1.0)


@given(angles)
def test_lambda_permutation_invariant(theta):
    s = 0.7 + 0.2j
    assert sampler.lambda_at(theta, s) == pytest.approx(sampler.lambda_at(theta[::-1], s), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(angles, st.floats(0.1, 0.9))
def test_log_derivative_finite_difference(theta, s):
    h = mpmath.mpf("1e-6")
    with mpmath.workprec(256):
        fd = (sampler.log_lambda_mp(theta, s + h) - sampler.log_lambda_mp(theta, s - h)) / (2 * h)
    value = sampler.lambda_log_derivative(theta, s)
    assert abs(value - complex(fd)) <= 1e-6 * abs(value)


def test_z_real_on_haar_samples():
    for theta in sampler.sample_angle_block(30, 500, 3):
        z1 = sampler.z_at(theta, 1.0)
        assert abs(z1.imag) <= 1e-9 * abs(z1)


def test_z_examples():
    z, _ = sampler.z_and_zprime([math.pi])
    assert z == pytest.approx(2)


# away from theta = 0, where Z(1) vanishes and rounding in the prefactor dominates
separated = st.lists(st.floats(1e-3, 2 * math.pi - 1e-3), min_size=1, max_size=8)


@settings(max_examples=30, deadline=None)
@given(separated)
def test_z_real_and_modulus(theta):
    z1 = sampler.z_at(theta, 1.0)
    assert abs(z1.imag) <= 1e-9 * max(abs(z1), 1e-300)
    assert abs(z1) == pytest.approx(abs(sampler.lambda_at(theta, 1.0)), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(angles)
def test_zprime_finite_difference(theta):
    _, zp = sampler.z_and_zprime(theta)
    h = 1e-6
    fd = (sampler.z_at(theta, 1 + h) - sampler.z_at(theta, 1 - h)) / (2 * h)
    assert abs(zp - fd) <= 1e-5 * max(1.0, abs(zp))


def test_adjoint_conjugates_phases():
    e = EigenAngles.from_angles([0.1, 2.0])
    assert np.allclose(np.sort(e.adjoint().angles), np.sort(np.mod([-0.1, -2.0], 2 * np.pi)))


def test_trivial_moment_is_exact():
    est = estimate_moment(MomentSpec.abs_lambda_power(0), 10, 500, 1)
    assert est.mean == 1 and est.std_error == 0


def test_abs_lambda_power_matches_gamma_product():
    est = estimate_moment(MomentSpec.abs_lambda_power(1), 10, 20_000, 2)
    assert abs(est.mean - float(abs_lambda_moment(10, 1))) < 4 * est.std_error


def test_estimate_is_deterministic_and_schedule_free():
    spec = MomentSpec.mixed_z(1, 1)
    a = estimate_moment(spec, 8, 2_500, 9)
    b = estimate_moment(spec, 8, 2_500, 9)
    c = estimate_moment(spec, 8, 2_500, 9, workers=2)
    assert a.mean == b.mean == c.mean
    assert a.std_error == c.std_error


def test_big_real_path_used_for_k2():
    assert MomentSpec.mixed_z(2, 1).uses_big_real()
    assert not MomentSpec.mixed_z(1, 0).uses_big_real()
    est = estimate_moment(MomentSpec.mixed_z(2, 2), 6, 2_000, 4)
    assert math.isfinite(est.mean) and est.std_error > 0


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        MomentSpec.mixed_z(1, 2)
    with pytest.raises(ValueError):
        estimate_moment(MomentSpec.mixed_z(1, 1), 0, 10, 1)
