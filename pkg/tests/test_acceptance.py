"""Acceptance criteria; each test prints one PASS/FAIL line at the required tolerance."""

import math

import numpy as np

from twlab import thermo
from twlab.baes import BaeSystem, bae_residual, newton_solve, seed_roots
from twlab.chainops import ChainSpec, Open, hamiltonian, hamiltonian_from_transfer
from twlab.spectra import (classify_strings, ground_state, ground_state_polynomials, symmetry_defects,
                           verify_identity_suite)
from twlab.thermo import (decay_ratio, lambda_per_site, log_slope, surface_energy_closed,
                          surface_extrapolation, w_g_closed)

BOUNDARY_A = Open.from_qbar(-1.2j, 0.8j, 1.0)
BOUNDARY_B = Open.from_qbar(-0.7j, 1.5j, 0.5)
E_INF = 1 - 4 * math.log(2)


def random_physical(rng):
    return Open.from_qbar(-1j * rng.uniform(0.5, 2.0), 1j * rng.uniform(0.5, 2.0), rng.uniform(0.2, 2.0))


def random_points(rng, k):
    return list(rng.uniform(-1.5, 1.5, k) + 1j * rng.uniform(-1.5, 1.5, k))


def test_c01_periodic_tw_identity(report_criterion):
    rng = np.random.default_rng(101)
    worst = 0.0
    for n in (2, 3, 4, 6):
        for _ in range(5):
            spec = ChainSpec(n, thetas=rng.uniform(-0.3, 0.3, n))
            rep = verify_identity_suite(spec, random_points(rng, 10))
            worst = max(worst, rep.residuals()["tw_operator"])
    ok = worst <= 1e-10
    report_criterion(1, "operator t-W identity", ok, f"max rel residual {worst:.2e} (<= 1e-10)")
    assert ok


def test_c02_open_tw_identity(report_criterion):
    rng = np.random.default_rng(202)
    boundaries = [BOUNDARY_A, random_physical(rng), random_physical(rng)]
    worst = 0.0
    for n in (2, 3, 4):
        for b in boundaries:
            spec = ChainSpec(n, thetas=rng.uniform(-0.3, 0.3, n), boundary=b)
            rep = verify_identity_suite(spec, random_points(rng, 10))
            worst = max(worst, rep.residuals()["open_tw_operator"])
    ok = worst <= 1e-9
    report_criterion(2, "open operator identity", ok, f"max rel residual {worst:.2e} (<= 1e-9)")
    assert ok


def test_c03_point_crossing_hermiticity(report_criterion):
    rng = np.random.default_rng(303)
    names = {"inhomogeneous_points", "hermiticity_t", "hermiticity_w", "open_inhomogeneous_points",
             "open_crossing", "open_hermiticity"}
    worst = {}
    for n in (2, 3, 4, 6):
        for b in (None, BOUNDARY_A, random_physical(rng)):
            kw = {} if b is None else {"boundary": b}
            spec = ChainSpec(n, thetas=rng.uniform(-0.3, 0.3, n), **kw)
            for k, v in verify_identity_suite(spec, random_points(rng, 4)).residuals().items():
                if k in names:
                    worst[k] = max(worst.get(k, 0.0), v)
    ok = set(worst) == names and max(worst.values()) <= 1e-10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in sorted(worst.items()))
    report_criterion(3, "point/crossing/hermiticity identities", ok, f"{detail} (<= 1e-10)")
    assert ok


def test_c04_hamiltonian_log_derivative(report_criterion):
    worst = 0.0
    for n in (2, 3):
        for b in (None, BOUNDARY_A):
            spec = ChainSpec(n) if b is None else ChainSpec(n, boundary=b)
            h = hamiltonian(spec)
            worst = max(worst, float(np.abs(h - hamiltonian_from_transfer(spec, 1e-5)).max()))
    ok = worst <= 1e-7
    report_criterion(4, "Hamiltonian vs transfer log-derivative", ok, f"max abs deviation {worst:.2e} (<= 1e-7)")
    assert ok


def test_c05_ed_bae_round_trip(report_criterion):
    cases = [ChainSpec(n) for n in (6, 8, 10, 12)] + [ChainSpec(n, boundary=BOUNDARY_A) for n in (4, 6, 8)]
    worst_res, worst_de, all_conv = 0.0, {False: 0.0, True: 0.0}, True
    for spec in cases:
        lam, w = ground_state_polynomials(spec)
        worst_res = max(worst_res, bae_residual(classify_strings(lam, w, spec), spec))
        report = newton_solve(BaeSystem(spec), seed_roots(spec))
        all_conv &= report.converged
        e_ed, _ = ground_state(spec)
        worst_de[spec.is_open] = max(worst_de[spec.is_open], abs(report.energy - e_ed))
    ok = all_conv and worst_res <= 1e-7 and worst_de[False] <= 1e-8 and worst_de[True] <= 1e-7
    report_criterion(5, "ED-BAE round trip", ok,
                     f"ED-root residual {worst_res:.1e} (<= 1e-7), converged {all_conv}, "
                     f"|dE| periodic {worst_de[False]:.1e} (<= 1e-8) open {worst_de[True]:.1e} (<= 1e-7)")
    assert ok


def test_c06_thermodynamic_energy(report_criterion):
    ns = (6, 8, 10, 12)
    gaps = [abs(ground_state(ChainSpec(n))[0] / n - E_INF) for n in ns]
    ok = gaps[-1] <= 0.05 and all(b < a for a, b in zip(gaps, gaps[1:]))
    report_criterion(6, "thermodynamic energy", ok,
                     "gaps " + ", ".join(f"{g:.4f}" for g in gaps) + " (final <= 0.05, decreasing)")
    assert ok


def test_c07_root_patterns(report_criterion):
    counts_ok, worst = True, 0.0
    for n in (6, 8, 10, 12):
        spec = ChainSpec(n)
        lam, w = ground_state_polynomials(spec)
        rs = classify_strings(lam, w, spec)
        counts_ok &= len(rs.z_centers) == n // 2 and len(rs.w_centers) == n // 2
        worst = max(worst, *symmetry_defects(lam, spec).values(), *symmetry_defects(w, spec).values())
    spec = ChainSpec(6, boundary=BOUNDARY_A)
    lam, w = ground_state_polynomials(spec)
    rs = classify_strings(lam, w, spec)
    boundary_ok = rs.boundary_z is not None and rs.boundary_w is not None and len(rs.boundary_w) == 2
    worst = max(worst, symmetry_defects(lam, spec)["crossing"])
    ok = counts_ok and boundary_ok and worst <= 1e-9
    report_criterion(7, "root patterns", ok, f"string counts {counts_ok}, open boundary pairs {boundary_ok}, "
                                             f"max symmetry defect {worst:.1e} (<= 1e-9)")
    assert ok


def test_c08_closed_form_convergence(report_criterion):
    ns = (6, 8, 10, 12)
    ok, parts = True, []
    for u in (0.5, 1.0):
        lam_closed = abs(lambda_per_site(u))
        lam_gaps, w_gaps = [], []
        for n in ns:
            spec = ChainSpec(n)
            lam, w = ground_state_polynomials(spec)
            lam_gaps.append(abs(abs(lam(u)) ** (1 / n) - lam_closed) / lam_closed)
            w_closed = abs(w_g_closed(u, n, spec)) ** (1 / n)
            w_gaps.append(abs(abs(w(u)) ** (1 / n) - w_closed) / w_closed)
        for name, gaps in (("Lambda", lam_gaps), ("W", w_gaps)):
            mono = all(b < a for a, b in zip(gaps, gaps[1:]))
            ok &= mono and gaps[-1] <= 0.05
            parts.append(f"{name}(u={u}) final {gaps[-1]:.3f}{'' if mono else ' non-monotone'}")
    report_criterion(8, "closed-form convergence", ok, ", ".join(parts) + " (<= 0.05, decreasing)")
    assert ok


def test_c09_decay(report_criterion):
    ns = (6, 8, 10, 12)
    measured = [decay_ratio(ChainSpec(n), 1.0).measured for n in ns]
    slope = log_slope(ns, measured)
    target = math.log(math.tanh(math.pi / 2))
    decreasing = all(b < a for a, b in zip(measured, measured[1:]))
    periodic = thermo.gs_energy_closed(ChainSpec(12)).constants
    opened = thermo.gs_energy_closed(ChainSpec(6, boundary=BOUNDARY_A)).constants
    constants_ok = periodic == {"C_w0": 2.0, "C_w1": 3.0} and opened == {"C_w0": 2.0, "C_w1": 0.25}
    ok = decreasing and abs(slope - target) <= 0.3 * abs(target) and constants_ok
    report_criterion(9, "W-term decay", ok, f"ratios " + ", ".join(f"{m:.4f}" for m in measured)
                     + f"; slope {slope:.4f} vs {target:.4f} (within 30%); constants {constants_ok}")
    assert ok


def test_c10_surface_energy(report_criterion):
    ns = (4, 6, 8, 10)
    ok, parts = True, []
    for name, b in (("A", BOUNDARY_A), ("B", BOUNDARY_B)):
        energies = [ground_state(ChainSpec(n, boundary=b))[0] for n in ns]
        intercept, _ = surface_extrapolation(ns, energies)
        closed = surface_energy_closed(b)
        rel = abs(intercept - closed) / abs(closed)
        ok &= rel <= 0.10
        parts.append(f"{name} extrapolated {intercept:.5f} vs closed {closed:.5f} (rel {rel:.3f})")
    report_criterion(10, "open surface energy", ok, ", ".join(parts) + " (<= 0.10)")
    assert ok
