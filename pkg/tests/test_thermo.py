import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings, strategies as st

from twlab import thermo
from twlab.chainops import ChainSpec, Open
from twlab.errors import DomainError
from twlab.spectra import ground_state, ground_state_polynomials
from twlab.thermo import (DensityKind, a_kernel, boundary_integral, decay_prediction, decay_ratio,
                          density_energy_per_site, ground_density, gs_energy_closed, kernel_equation_residual,
                          lambda_g_closed, lambda_per_site, log_gamma, log_slope, open_density_fourier,
                          rho_ground, rho_ground_fourier, surface_energy_closed, surface_extrapolation,
                          w_g_closed)

BOUNDARY_A = Open.from_qbar(-1.2j, 0.8j, 1.0)


def test_rho_values():
    assert rho_ground(DensityKind.Z_ROOTS, 0.0) == 0.5
    assert rho_ground(DensityKind.W_ROOTS, 40.0) < 1e-50
    lam = np.linspace(-3, 3, 13)
    assert np.allclose(rho_ground(DensityKind.Z_ROOTS, lam), rho_ground(DensityKind.Z_ROOTS, -lam))


@pytest.mark.parametrize("kind", [DensityKind.Z_ROOTS, DensityKind.W_ROOTS])
def test_density_normalization_and_fourier(kind):
    profile = ground_density(kind)
    assert abs(profile.normalization() - 0.5) <= 1e-10
    assert profile.fourier_defect(np.linspace(-20, 20, 41)) <= 1e-8


def test_fourier_at_zero():
    assert rho_ground_fourier(0.0) == pytest.approx(1 / (4 * math.pi))
    rho0, _ = open_density_fourier(0.0, 1.2, 0.8, z1=1.3)
    assert rho0 == pytest.approx(1 / (4 * math.pi))


def test_open_density_cancellation():
    z1 = 1.3
    w = np.linspace(-5, 5, 21)
    _, rho1 = open_density_fourier(w, z1 - 0.5, z1 + 0.5, z1=z1)
    expected = (a_kernel(2, w) - a_kernel(1, w)) / (2 * math.pi * (a_kernel(1, w) + a_kernel(3, w)))
    assert np.allclose(rho1, expected, atol=1e-15)


def test_open_density_decay():
    ws = np.array([10.0, 20.0, 40.0])
    rho0, rho1 = open_density_fourier(ws, 1.2, 0.8, chi=(0.8, 1.9))
    assert np.all(np.diff(np.log(rho0)) < 0)
    # a_2/a_1 ratio structure: rho0 ~ exp(-|w|/2)/(2 pi)
    assert np.allclose(rho0 * 2 * math.pi / np.exp(-ws / 2), 1, atol=1e-4)
    assert np.all(np.isfinite(rho1))


def test_open_density_argument_check():
    with pytest.raises(ValueError):
        open_density_fourier(0.0, 1.2, 0.8)


@pytest.mark.parametrize("u", [0.5 + 0.2j, 1.3 - 0.4j])
def test_kernel_equation(u):
    assert kernel_equation_residual(u) <= 1e-8


def test_density_energy():
    assert density_energy_per_site() == pytest.approx(1 - 4 * math.log(2), abs=1e-9)


def test_log_gamma_known_values():
    assert abs(log_gamma(1)) <= 1e-15
    assert abs(np.exp(log_gamma(0.5)) - math.sqrt(math.pi)) <= 1e-12
    z = 0.7 + 0.3j
    assert abs(log_gamma(z + 1) - (np.log(z) + log_gamma(z))) <= 1e-12
    g = np.exp(log_gamma(0.25) + log_gamma(0.75))
    assert abs(g - math.pi / math.sin(math.pi / 4)) <= 1e-11 * abs(g)


def test_log_gamma_poles():
    for z in (0, -1, -7):
        with pytest.raises(DomainError):
            log_gamma(z)


@settings(max_examples=50, deadline=None)
@given(st.floats(-20, 20), st.floats(-20, 20))
def test_log_gamma_matches_gamma(x, y):
    z = complex(x, y)
    if abs(z) > 50 or (y == 0 and x <= 0 and x == math.floor(x)):
        return
    ref = scipy.special.gamma(z)
    if not np.isfinite(ref) or ref == 0 or abs(ref) > 1e300:
        return
    assert abs(np.exp(log_gamma(z)) - ref) <= 1e-12 * abs(ref)


def test_lambda_per_site_at_zero():
    assert abs(lambda_per_site(0) - 1) <= 1e-14
    per_site, full = lambda_g_closed(0, ChainSpec(8))
    assert abs(per_site - 1) <= 1e-14 and abs(full) <= 1e-13


def test_lambda_strip_warning():
    with pytest.warns(UserWarning):
        lambda_g_closed(0.3 + 1.2j, ChainSpec(4))
    with pytest.warns(UserWarning):
        lambda_g_closed(0.3 + 0.6j, ChainSpec(4, boundary=BOUNDARY_A))


def test_closed_forms_need_unit_eta():
    with pytest.raises(DomainError):
        lambda_g_closed(0.5, ChainSpec(4, eta=2j))


def test_w_per_site_modulus():
    w = w_g_closed(1.0, 1, ChainSpec(1))
    assert abs(w) / 3 == pytest.approx(1.83430, abs=1e-5)
    assert abs(w) / 3 == pytest.approx(2 * math.tanh(math.pi / 2))


def test_w_pole_at_zero():
    with pytest.raises(DomainError):
        w_g_closed(0, 4, ChainSpec(4))


def test_w_large_u_scaling():
    u = 1000.0
    assert w_g_closed(u, 4, ChainSpec(4)) / u**4 == pytest.approx(3, rel=1e-5)


def test_constants():
    assert (thermo.C_W0, thermo.C_W1, thermo.C_W0_OPEN, thermo.C_W1_OPEN) == (2, 3, 2, 0.25)
    assert thermo.PER_SITE_ENERGY == pytest.approx(-1.7725887, abs=1e-7)
    assert thermo.SURFACE_CONSTANT == pytest.approx(0.7553, abs=1e-4)
    res = gs_energy_closed(ChainSpec(10))
    assert res.surface_energy is None and res.total_energy == pytest.approx(10 * thermo.PER_SITE_ENERGY)
    assert res.to_record()["constants"] == {"C_w0": 2.0, "C_w1": 3.0}
    assert gs_energy_closed(ChainSpec(4, boundary=BOUNDARY_A)).constants == {"C_w0": 2.0, "C_w1": 0.25}


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 6.0))
def test_boundary_integral_digamma(a):
    expected = 0.5 * (scipy.special.digamma((a + 1) / 2) - scipy.special.digamma(a / 2))
    assert boundary_integral(a) == pytest.approx(expected, abs=1e-9)


def test_surface_energy_values():
    assert surface_energy_closed(BOUNDARY_A) == pytest.approx(-0.08469, abs=1e-5)
    with pytest.raises(DomainError):
        boundary_integral(0.0)


def test_decay_prediction_value():
    assert decay_prediction(1.0, ChainSpec(6)) == pytest.approx(3 * math.tanh(math.pi / 2) ** 6)
    # tanh^6(pi/2) = 0.595181, so the prediction is 1.785542
    assert decay_prediction(1.0, ChainSpec(6)) == pytest.approx(1.785542, abs=1e-6)


def test_decay_ratio_periodic():
    ns = [6, 8, 10, 12]
    ratios = [decay_ratio(ChainSpec(n), 1.0).measured for n in ns]
    assert np.all(np.diff(ratios) < 0)
    target = math.log(math.tanh(math.pi / 2))
    assert abs(log_slope(ns, ratios) - target) <= 0.3 * abs(target)
    assert ratios[-1] / ratios[0] <= math.tanh(math.pi / 2) ** 6 * 1.5


def test_decay_ratio_open_decreases():
    ratios = [decay_ratio(ChainSpec(n, boundary=BOUNDARY_A), 1.0).measured for n in (4, 6, 8)]
    assert np.all(np.diff(ratios) < 0)


def test_decay_at_qdet_zero():
    with pytest.raises(DomainError):
        decay_ratio(ChainSpec(4), -1j)


@pytest.mark.parametrize("u", [0.5, 1.0])
def test_lambda_gap_shrinks(u):
    gaps = []
    for n in (6, 8, 10, 12):
        lam, _ = ground_state_polynomials(ChainSpec(n))
        gaps.append(abs(abs(lam(u)) ** (1 / n) - abs(lambda_per_site(u))))
    assert np.all(np.diff(gaps) < 0)


@pytest.mark.parametrize("u", [0.5, 1.0])
def test_w_gap_shrinks(u):
    gaps = []
    for n in (6, 8, 10, 12):
        _, w = ground_state_polynomials(ChainSpec(n))
        closed = abs(w_g_closed(u, n, ChainSpec(n))) ** (1 / n)
        gaps.append(abs(abs(w(u)) ** (1 / n) - closed))
    assert np.all(np.diff(gaps) < 0)


def test_open_lambda_ratio_approaches_one():
    errs = []
    for n in (4, 6, 8, 10):
        spec = ChainSpec(n, boundary=BOUNDARY_A)
        lam, _ = ground_state_polynomials(spec)
        _, log_full = lambda_g_closed(0.5, spec)
        errs.append(abs(abs(lam(0.5)) / abs(np.exp(log_full)) - 1))
    assert errs[-1] < errs[0]


def test_surface_extrapolation_linear():
    ns = np.array([4, 6, 8, 10])
    energies = ns * thermo.PER_SITE_ENERGY + 0.3 - 1.7 / ns
    intercept, slope = surface_extrapolation(ns, energies)
    assert intercept == pytest.approx(0.3) and slope == pytest.approx(-1.7)


def test_open_ed_energy_real():
    e, _ = ground_state(ChainSpec(4, boundary=BOUNDARY_A))
    assert isinstance(e, float)
