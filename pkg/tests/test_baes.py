import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twlab.baes import (BaeSystem, Continuation, DensityQuantile, bae_residual, default_boundary_seeds,
                        density_quantile, energy_from_roots, lambda_polynomial, newton_solve, residuals,
                        seed_roots)
from twlab.chainops import ChainSpec, Open
from twlab.errors import SingularityError
from twlab.spectra import classify_strings, ground_state, ground_state_polynomials, multiset_distance, rel_diff

BOUNDARY_A = Open.from_qbar(-1.2j, 0.8j, 1.0)
BOUNDARY_B = Open.from_qbar(-0.7j, 1.5j, 0.5)


def ed_roots(spec):
    lam, w = ground_state_polynomials(spec)
    return classify_strings(lam, w, spec)


def test_system_validation():
    with pytest.raises(ValueError):
        BaeSystem(ChainSpec(3))
    with pytest.raises(ValueError):
        BaeSystem(ChainSpec(2, thetas=(0.1, 0.0)))
    with pytest.raises(ValueError):
        BaeSystem(ChainSpec(2, eta=1.0))
    assert BaeSystem(ChainSpec(6)).size == 12
    assert BaeSystem(ChainSpec(6, boundary=BOUNDARY_A)).size == 15


def test_pack_round_trip():
    spec = ChainSpec(6, boundary=BOUNDARY_A)
    system = BaeSystem(spec)
    roots = ed_roots(spec)
    back = system.unpack(system.pack(roots))
    assert multiset_distance(back.z_roots(), roots.z_roots()) <= 1e-14
    assert multiset_distance(back.w_roots(), roots.w_roots()) <= 1e-14
    with pytest.raises(ValueError):
        BaeSystem(ChainSpec(4, boundary=BOUNDARY_A)).pack(roots)


def test_n2_periodic_ed_roots():
    spec = ChainSpec(2)
    assert bae_residual(ed_roots(spec), spec) <= 1e-8


def test_perturbation_monotone():
    spec = ChainSpec(4)
    system = BaeSystem(spec)
    x0 = system.pack(ed_roots(spec))
    norms = []
    for eps in np.linspace(0, 0.01, 11):
        x = x0.copy()
        x[0] += eps
        norms.append(np.linalg.norm(residuals(system, x)))
    assert np.all(np.diff(norms) > 0)


@pytest.mark.parametrize("n", [4, 6, 8])
@pytest.mark.parametrize("boundary", [BOUNDARY_A, BOUNDARY_B], ids=["a", "b"])
def test_open_ed_roots(n, boundary):
    spec = ChainSpec(n, boundary=boundary)
    assert bae_residual(ed_roots(spec), spec) <= 1e-7


def test_collision_is_singular():
    # exact strings on a shared center put w - eta on a zero of Lambda
    system = BaeSystem(ChainSpec(4))
    x = np.concatenate([[-0.3, 0.3], [0.0, 0.0], [-0.3, 0.3], [0.0, 0.0]])
    with pytest.raises(SingularityError):
        residuals(system, x)


def test_density_quantile_values():
    assert density_quantile(0.5) == pytest.approx(0.0, abs=1e-15)
    assert density_quantile(0.75) == pytest.approx(math.asinh(1) / math.pi)
    assert density_quantile(0.75) == pytest.approx(0.28055, abs=1e-5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.99))
def test_density_quantile_odd(f):
    assert density_quantile(f) == pytest.approx(-density_quantile(1 - f), abs=1e-12)


def test_default_boundary_seeds():
    z1, chi1, chi2 = default_boundary_seeds(BOUNDARY_A, 1j)
    assert z1 == pytest.approx(0.8 + 0.5 - 0.03)
    assert chi1 == pytest.approx(z1 - 0.5) and chi2 == pytest.approx(z1 + 0.6)


def test_n12_seeds_near_solution():
    spec = ChainSpec(12)
    system = BaeSystem(spec)
    seed = seed_roots(spec)
    report = newton_solve(system, seed)
    assert report.converged
    assert np.abs(seed[:6] - report.unknowns[:6]).max() <= 0.2
    assert np.abs(seed[12:18] - report.unknowns[12:18]).max() <= 0.2
    e_ed, _ = ground_state(spec)
    assert abs(report.energy - e_ed) <= 1e-8


def test_noise_recovery_n8():
    spec = ChainSpec(8)
    system = BaeSystem(spec)
    x0 = system.pack(ed_roots(spec))
    noisy = x0 + 1e-2 * np.random.default_rng(8).standard_normal(len(x0))
    report = newton_solve(system, noisy)
    assert report.converged and report.final_residual <= 1e-12
    assert report.iterations <= 25
    assert np.abs(report.unknowns - x0).max() <= 1e-7


@pytest.mark.parametrize("n", [6, 8, 10, 12])
def test_periodic_energy_and_lambda(n):
    spec = ChainSpec(n)
    report = newton_solve(BaeSystem(spec), seed_roots(spec))
    assert report.converged
    e_ed, _ = ground_state(spec)
    assert abs(report.energy - e_ed) <= 1e-8
    lam, _ = ground_state_polynomials(spec)
    assert rel_diff(lambda_polynomial(report.roots, spec).coefficients, lam.coefficients) <= 1e-7


@pytest.mark.parametrize("n", [4, 6, 8])
def test_open_energy(n):
    spec = ChainSpec(n, boundary=BOUNDARY_A)
    report = newton_solve(BaeSystem(spec), seed_roots(spec))
    assert report.converged
    e_ed, _ = ground_state(spec)
    assert abs(report.energy - e_ed) <= 1e-7


def test_round_trip_fixed_point():
    spec = ChainSpec(6, boundary=BOUNDARY_A)
    system = BaeSystem(spec)
    x0 = system.pack(ed_roots(spec))
    report = newton_solve(system, x0)
    assert report.converged
    assert np.abs(report.unknowns - x0).max() <= 1e-7


def test_continuation_n4_to_n6():
    small = ChainSpec(4, boundary=BOUNDARY_A)
    src = newton_solve(BaeSystem(small), seed_roots(small))
    spec = ChainSpec(6, boundary=BOUNDARY_A)
    report = newton_solve(BaeSystem(spec), seed_roots(spec, Continuation(src)))
    assert report.converged
    ed = ed_roots(spec)
    assert multiset_distance(report.roots.z_roots(), ed.z_roots()) <= 1e-7
    assert multiset_distance(report.roots.w_roots(), ed.w_roots()) <= 1e-7


def test_continuation_kind_mismatch():
    src = newton_solve(BaeSystem(ChainSpec(4)), seed_roots(ChainSpec(4)))
    with pytest.raises(ValueError):
        seed_roots(ChainSpec(6, boundary=BOUNDARY_A), Continuation(src))


def test_energy_from_roots_n2():
    spec = ChainSpec(2)
    assert energy_from_roots(ed_roots(spec), spec) == pytest.approx(-6, abs=1e-10)


def test_energy_from_roots_open_n6():
    spec = ChainSpec(6, boundary=BOUNDARY_A)
    e_ed, _ = ground_state(spec)
    assert abs(energy_from_roots(ed_roots(spec), spec) - e_ed) <= 1e-7


def test_solver_deterministic():
    spec = ChainSpec(6)
    a = newton_solve(BaeSystem(spec), seed_roots(spec, DensityQuantile()))
    b = newton_solve(BaeSystem(spec), seed_roots(spec, DensityQuantile()))
    assert np.array_equal(a.unknowns, b.unknowns) and a.iterations == b.iterations


def test_nonconvergence_is_reported():
    spec = ChainSpec(6)
    report = newton_solve(BaeSystem(spec), seed_roots(spec), max_iter=1)
    assert not report.converged and report.message
    assert report.to_record()["converged"] is False


def test_seed_dimension_checked():
    with pytest.raises(ValueError):
        newton_solve(BaeSystem(ChainSpec(4)), np.zeros(3))
