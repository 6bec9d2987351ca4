"""Thermodynamic-limit closed forms for the ground state.

Root densities, Gamma-ratio expressions for Lambda_g and W_g (periodic and
open), ground-state and surface energies, and the ratio of the W-term to the
quantum-determinant term that decays with N.  Formulas use eta = i, with the
open boundary fields entering as the real multiples p/eta and qbar/eta.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.special

from twlab.chainops import ChainSpec, Open, scalar_fns
from twlab.errors import DomainError
from twlab.spectra import ground_state_polynomials

QUAD_TOL = 1e-10
LAMBDA_CUTOFF = 30.0

# integration constants fixed by the large-u behaviour
C_W0 = 2.0
C_W1 = 3.0
C_W0_OPEN = 2.0
C_W1_OPEN = 0.25

PER_SITE_ENERGY = 1.0 - 4.0 * math.log(2.0)
SURFACE_CONSTANT = -1.0 + math.pi - 2.0 * math.log(2.0)


class DensityKind(enum.Enum):
    Z_ROOTS = "z"
    W_ROOTS = "w"
    OPEN_CORRECTION = "open"


def rho_ground(kind: DensityKind, lam):
    """Leading density 1/(2 cosh(pi lambda)); identical for z- and w-root centers."""
    DensityKind(kind)
    return 0.5 / np.cosh(np.pi * np.asarray(lam, dtype=float))


def a_kernel(n, w):
    """a_n(w) = exp(-|n||w|/2); the index enters through its modulus."""
    return np.exp(-abs(n) * np.abs(np.asarray(w, dtype=float)) / 2)


def rho_ground_fourier(w):
    """Fourier transform (1/2pi) int rho e^{-iwt} dt of the leading density."""
    return a_kernel(2, w) / (2 * np.pi * (a_kernel(1, w) + a_kernel(3, w)))


def open_density_fourier(w, p: float, qbar: float, *, z1: float | None = None,
                         chi: tuple | None = None):
    """(rho~0, rho~1) for open z-roots (pass ``z1``) or w-roots (pass ``chi``)."""
    if (z1 is None) == (chi is None):
        raise ValueError("pass exactly one of z1 (z-roots) or chi (w-roots)")
    w = np.asarray(w, dtype=float)
    den = 2 * np.pi * (a_kernel(1, w) + a_kernel(3, w))
    rho0 = a_kernel(2, w) / den
    if z1 is not None:
        plus = a_kernel(2, w) + a_kernel(2 * p, w) + a_kernel(2 * qbar, w)
        minus = a_kernel(1, w) + a_kernel(2 * z1 - 1, w) + a_kernel(2 * z1 + 1, w)
    else:
        c1, c2 = chi
        plus = (a_kernel(3, w) + a_kernel(2 * p + 1, w) + a_kernel(2 * p - 1, w)
                + a_kernel(2 * qbar + 1, w) + a_kernel(2 * qbar - 1, w))
        minus = (a_kernel(1, w) + a_kernel(2 * c1 - 1, w) + a_kernel(2 * c1 + 1, w)
                 + a_kernel(2 * c2 - 1, w) + a_kernel(2 * c2 + 1, w))
    return rho0, (plus - minus) / den


def fourier_transform(f: Callable, w: float) -> float:
    """(1/2pi) int f(t) e^{-iwt} dt for an even real f (cosine transform)."""
    val, _ = scipy.integrate.quad(lambda t: f(t) * math.cos(w * t), 0, LAMBDA_CUTOFF,
                                  epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400)
    return val / math.pi


@dataclass
class DensityProfile:
    kind: DensityKind
    closed_form: Callable
    fourier_form: Callable
    kernel_terms: list = field(default_factory=list)

    def normalization(self) -> float:
        val, _ = scipy.integrate.quad(self.closed_form, 0, LAMBDA_CUTOFF,
                                      epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
        return 2 * val

    def fourier_defect(self, ws) -> float:
        return max(abs(fourier_transform(self.closed_form, w) - float(self.fourier_form(w)))
                   for w in ws)


def ground_density(kind: DensityKind = DensityKind.Z_ROOTS) -> DensityProfile:
    return DensityProfile(kind, lambda lam: rho_ground(kind, lam), rho_ground_fourier,
                          kernel_terms=[(1.0, 2), (-1.0, 1), (-1.0, 3)])


def kernel_equation_residual(u: complex, eta: complex = 1j) -> float:
    """Relative defect of the four-pole kernel equation solved by the leading density."""
    poles = (eta / 2, -eta / 2, 1.5 * eta, -1.5 * eta)

    def integrand(lam, part):
        k = sum(1 / (u - lam - s) for s in poles)
        v = k * rho_ground(DensityKind.Z_ROOTS, lam)
        return v.real if part == 0 else v.imag

    lhs = complex(*(scipy.integrate.quad(integrand, -LAMBDA_CUTOFF, LAMBDA_CUTOFF, args=(part,),
                                         epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400)[0]
                    for part in (0, 1)))
    rhs = 1 / (u + eta) + 1 / (u - eta)
    return abs(lhs - rhs) / abs(rhs)


def density_energy_per_site(eta: complex = 1j) -> float:
    """-2i int (1/(l+i/2) + 1/(l-3i/2)) rho(l) dl - 1 evaluated by quadrature."""
    def integrand(lam):
        k = 1 / (lam + eta / 2) + 1 / (lam - 1.5 * eta)
        return (-2j * k).real * rho_ground(DensityKind.Z_ROOTS, lam)

    val, _ = scipy.integrate.quad(integrand, -LAMBDA_CUTOFF, LAMBDA_CUTOFF,
                                  epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400)
    return val - 1.0


# Gamma-function closed forms


def log_gamma(z) -> complex:
    """log Gamma on the branch continuous off the negative real axis."""
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == math.floor(z.real):
        raise DomainError(f"Gamma has a pole at {z.real:g}")
    return complex(scipy.special.loggamma(z))


def _gamma_ratio(a: float, u: complex) -> complex:
    """Gamma((a+1)/2+iu/2) Gamma((a+2)/2-iu/2) / (Gamma(a/2+iu/2) Gamma((a+1)/2-iu/2))."""
    x = 0.5j * u
    return complex(np.exp(log_gamma((a + 1) / 2 + x) + log_gamma((a + 2) / 2 - x)
                          - log_gamma(a / 2 + x) - log_gamma((a + 1) / 2 - x)))


def lambda_per_site(u: complex) -> complex:
    """2 Gamma(1+iu/2) Gamma(3/2-iu/2) / (Gamma(1/2+iu/2) Gamma(1-iu/2))."""
    return 2 * _gamma_ratio(1.0, u)


def _require_unit_eta(spec: ChainSpec) -> None:
    if abs(spec.eta - 1j) > 1e-14:
        raise DomainError("closed forms are stated for eta = i")


def _boundary_multiples(b: Open, eta: complex) -> tuple:
    p, qbar = b.p / eta, b.qbar / eta
    if abs(p.imag) > 1e-12 or abs(qbar.imag) > 1e-12:
        raise DomainError("closed forms need p and qbar to be real multiples of eta")
    if p.real == 0 or qbar.real == 0:
        raise DomainError("closed forms need nonzero boundary fields")
    return abs(p.real), abs(qbar.real)


def lambda_g_closed(u: complex, spec: ChainSpec) -> tuple:
    """(per-site value, log of the full ground-state eigenvalue) in the large-N limit."""
    _require_unit_eta(spec)
    u = complex(u)
    strip = 0.5 if spec.is_open else 1.0
    if abs(u.imag) >= strip:
        warnings.warn(f"u = {u} lies outside the validated strip |Im u| < {strip}", stacklevel=2)
    per_site = lambda_per_site(u)
    n = spec.n_sites
    if not spec.is_open:
        return per_site, n * np.log(per_site)
    b: Open = spec.boundary
    p, qbar = _boundary_multiples(b, spec.eta)
    eta = spec.eta
    x = math.pi * u / 2 - 0.25j * math.pi
    boundary = (8 * np.sqrt(1 + complex(b.xi) ** 2) / (u + eta / 2) * np.cosh(x) / np.sinh(x)
                * _gamma_ratio(1.0, u) * _gamma_ratio(p, u) * _gamma_ratio(qbar, u))
    return per_site, np.log(boundary) + 2 * n * np.log(per_site)


def w_g_closed(u: complex, n_sites: int, spec: ChainSpec) -> complex:
    """Large-N ground-state W (open: W-bar) with the integration constants applied."""
    _require_unit_eta(spec)
    u = complex(u)
    if u == 0:
        raise DomainError("the closed form of W has a pole at u = 0")
    eta = spec.eta
    th = np.tanh(np.pi * u / 2)
    if not spec.is_open:
        return C_W1 * ((u + eta) * (u - eta) / u * C_W0 / 2 * th) ** n_sites
    b: Open = spec.boundary
    _boundary_multiples(b, eta)
    n = n_sites
    fields = (u - b.p) * (u + b.p) * (u - b.qbar) * (u + b.qbar)
    return complex(4 * C_W1_OPEN * (complex(b.xi) ** 2 - 3) * fields * th**2
                   * (u + eta) ** (2 * n + 1) * (u - eta) ** (2 * n + 1) / u ** (2 * n + 2)
                   * (C_W0_OPEN / 2 * th) ** (2 * n))


# energies


def boundary_integral(a: float) -> float:
    """int_0^inf e^{-a w} / (1 + e^{-w}) dw for a > 0."""
    if a <= 0:
        raise DomainError("boundary integral needs a positive field")
    val, _ = scipy.integrate.quad(lambda w: math.exp(-a * w) / (1 + math.exp(-w)), 0, math.inf,
                                  epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400)
    return val


def surface_energy_closed(boundary: Open, eta: complex = 1j) -> float:
    """O(1) boundary contribution to the open ground-state energy."""
    p = abs(boundary.p / eta)
    q = abs(boundary.q / eta)
    xi = float(np.real(boundary.xi))
    s = math.sqrt(1 + xi**2)
    if p == 0 or q == 0:
        raise DomainError("surface energy needs |p|, |q| > 0")
    return (SURFACE_CONSTANT + 1 / p + s / q
            - 2 * (boundary_integral(p) + boundary_integral(q / s)))


@dataclass
class DecayPoint:
    n_sites: int
    u: complex
    measured: float
    predicted: float

    def to_record(self) -> dict:
        return {"n_sites": self.n_sites, "u_re": self.u.real, "u_im": self.u.imag,
                "measured": self.measured, "predicted": self.predicted}


@dataclass
class ThermoResult:
    per_site_energy: float
    surface_energy: float | None
    n_sites: int
    is_open: bool
    constants: dict
    decay_table: list = field(default_factory=list)

    @property
    def total_energy(self) -> float:
        return self.per_site_energy * self.n_sites + (self.surface_energy or 0.0)

    def to_record(self) -> dict:
        return {
            "per_site_energy": self.per_site_energy,
            "surface_energy": self.surface_energy,
            "total_energy": self.total_energy,
            "n_sites": self.n_sites,
            "is_open": self.is_open,
            "constants": dict(self.constants),
            "decay_table": [d.to_record() for d in self.decay_table],
            "tolerances": {"quad": QUAD_TOL, "lambda_cutoff": LAMBDA_CUTOFF},
        }


def gs_energy_closed(spec: ChainSpec) -> ThermoResult:
    if spec.is_open:
        surface = surface_energy_closed(spec.boundary, spec.eta)
        constants = {"C_w0": C_W0_OPEN, "C_w1": C_W1_OPEN}
    else:
        surface = None
        constants = {"C_w0": C_W0, "C_w1": C_W1}
    return ThermoResult(PER_SITE_ENERGY, surface, spec.n_sites, spec.is_open, constants)


# decay of the W-term


def decay_prediction(u: complex, spec: ChainSpec) -> float:
    th = np.tanh(np.pi * complex(u) / 2)
    n = spec.n_sites
    if not spec.is_open:
        return float(abs(C_W1 * (C_W0 / 2 * th) ** n))
    xi2 = complex(spec.boundary.xi) ** 2
    return float(abs(4 * (xi2 - 3) / (1 + xi2) * C_W1_OPEN * th**2 * (C_W0_OPEN / 2 * th) ** (2 * n)))


def decay_ratio(spec: ChainSpec, u: complex, w_poly=None) -> DecayPoint:
    """|W-term| / |quantum-determinant term| of the ground-state t-W relation.

    ``w_poly`` is the ground-state W (open: W-bar) polynomial; computed by exact
    diagonalization when omitted.
    """
    if w_poly is None:
        w_poly = ground_state_polynomials(spec)[1]
    u = complex(u)
    f = scalar_fns(spec)
    eta, n = spec.eta, spec.n_sites
    th = np.array(spec.thetas, dtype=complex)
    if spec.is_open:
        qdet = f.qdet_open(u)
        w_term = u**2 * np.prod((u - th) * (u + th)) * w_poly(u)
    else:
        qdet = f.a(u) * f.d(u - eta)
        w_term = f.d(u) * w_poly(u)
    if abs(qdet) == 0:
        raise DomainError(f"u = {u} is a zero of the quantum determinant")
    return DecayPoint(n, u, float(abs(w_term / qdet)), decay_prediction(u, spec))


def log_slope(ns, values) -> float:
    """Least-squares slope of log(values) against N."""
    return float(np.polyfit(np.asarray(ns, dtype=float), np.log(np.asarray(values, dtype=float)), 1)[0])


def surface_extrapolation(ns, energies) -> tuple:
    """(intercept, slope) of E(N) - N e_inf fitted linearly in 1/N."""
    ns = np.asarray(ns, dtype=float)
    y = np.asarray(energies, dtype=float) - ns * PER_SITE_ENERGY
    slope, intercept = np.polyfit(1 / ns, y, 1)
    return float(intercept), float(slope)
