"""Homogeneous zero-root equations and their damped Newton solution.

Unknowns are real: every 2-string is packed as (center, deviation) with members
c +- eta*h*(1+dev) (h = 1 for z-roots, 3/2 for w-roots); open chains mirror each
string to -c and add the imaginary-axis boundary heights.  The boundary pair
chi1 = z1 - 1/2 + delta is packed as (z1, delta) with delta exponentially small
in N, so its two equations are recast as their ratio (the vanishing factor
cancels) plus an explicit equation for delta.

One complex equation is imposed per string (at its upper member) and one real
equation per boundary root.  Because the residual polynomial
Lambda Lambda - ad - dW (open: its even analogue) has real structure, this
square set already forces all remaining equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from twlab.chainops import ChainSpec, Open
from twlab.errors import ConditioningError, ConsistencyError, SingularityError
from twlab.spectra import Kind, RootSet, SpectralPolynomial

FD_STEP = 1e-7
MAX_HALVINGS = 30
COLLISION_TOL = 1e-10
LOG_CLIP = 50.0
# exact strings with equal z/w centers put w - eta on a zero of Lambda
SEED_Z_DEVIATION = -0.01
SEED_W_DEVIATION = 0.005


@dataclass(frozen=True)
class BaeSystem:
    """Root equations of a homogeneous chain with eta on the positive imaginary axis."""

    spec: ChainSpec

    def __post_init__(self):
        s = self.spec
        if s.n_sites % 2:
            raise ValueError("root equations need an even number of sites")
        if not s.homogeneous:
            raise ValueError("root equations are solved in the homogeneous limit")
        if abs(s.eta.real) > 1e-12 * abs(s.eta) or s.eta.imag <= 0:
            raise ValueError("eta must lie on the positive imaginary axis")

    @property
    def is_open(self) -> bool:
        return self.spec.is_open

    @property
    def n_strings(self) -> int:
        return self.spec.n_sites // 2

    @property
    def size(self) -> int:
        n = self.spec.n_sites
        return 2 * n + 3 if self.is_open else 2 * n

    def unpack(self, x) -> RootSet:
        x = np.asarray(x, dtype=float)
        m = self.n_strings
        rs = RootSet(eta=self.spec.eta, is_open=self.is_open)
        rs.z_centers = list(x[:m])
        rs.z_deviations = list(x[m : 2 * m])
        k = 2 * m
        if self.is_open:
            rs.boundary_z = float(x[k])
            k += 1
        rs.w_centers = list(x[k : k + m])
        rs.w_deviations = list(x[k + m : k + 2 * m])
        if self.is_open:
            rs.boundary_w = (rs.boundary_z - 0.5 + float(x[k + 2 * m]), float(x[k + 2 * m + 1]))
        return rs

    def pack(self, roots: RootSet) -> np.ndarray:
        parts = [roots.z_centers, roots.z_deviations]
        if self.is_open:
            parts.append([roots.boundary_z])
        parts += [roots.w_centers, roots.w_deviations]
        if self.is_open:
            chi1, chi2 = roots.boundary_w
            parts.append([chi1 - roots.boundary_z + 0.5, chi2])
        x = np.concatenate([np.asarray(p, dtype=float) for p in parts])
        if len(x) != self.size:
            raise ValueError(f"root set has {len(x)} parameters, system needs {self.size}")
        return x


def _wrap(z: complex) -> complex:
    return complex(z.real, (z.imag + math.pi) % (2 * math.pi) - math.pi)


def _logsum(values) -> complex:
    values = np.asarray(values, dtype=complex)
    if np.any(np.abs(values) < COLLISION_TOL):
        raise SingularityError("root equations evaluated at a pole (root collision)")
    return complex(np.log(values).sum())


def _drop(values, root):
    """Remove the entry equal to ``root`` (it is present by construction)."""
    i = int(np.argmin(np.abs(values - root)))
    return np.delete(values, i)


class _Equations:
    """Log-ratio residuals of the root equations for fixed root sets.

    ``skip_z``/``skip_w`` drop one root from Lambda/W so that a known vanishing
    factor can be handled analytically.
    """

    def __init__(self, spec: ChainSpec, z_roots, w_roots):
        self.spec = spec
        self.eta = spec.eta
        self.n = spec.n_sites
        self.z = np.asarray(z_roots, dtype=complex)
        self.w = np.asarray(w_roots, dtype=complex)
        if spec.is_open:
            b: Open = spec.boundary
            self.s = complex(np.sqrt(1 + complex(b.xi) ** 2))
            self.p, self.q = complex(b.p), complex(b.q)
            self.lead_w = complex(b.xi) ** 2 - 3

    def log_lambda(self, u, skip_z=None) -> complex:
        z = self.z if skip_z is None else _drop(self.z, skip_z)
        return math.log(2) + _logsum(u - z + self.eta / 2)

    def log_w(self, u, skip_w=None) -> complex:
        lead = self.lead_w if self.spec.is_open else 3.0
        w = self.w if skip_w is None else _drop(self.w, skip_w)
        return np.log(complex(lead)) + _logsum(u - w)

    def log_qdet(self, u) -> complex:
        eta, n, s = self.eta, self.n, self.s
        f = [u - eta, u + eta, u - self.p, u + self.p, s * u + self.q, s * u - self.q]
        return _logsum(f) + 2 * n * _logsum([u + eta, u - eta])

    def z_equation(self, z, skip_w=None) -> complex:
        eta, n = self.eta, self.n
        if self.spec.is_open:
            u = z - eta / 2
            return _wrap(self.log_qdet(u) - (2 * n + 2) * _logsum([u]) - self.log_w(u, skip_w))
        lhs = n * _logsum([z + eta / 2, z - 1.5 * eta])
        rhs = 1j * math.pi + n * _logsum([z - eta / 2]) + self.log_w(z - eta / 2)
        return _wrap(lhs - rhs)

    def w_equation(self, w, skip_z=None) -> complex:
        eta, n = self.eta, self.n
        both = self.log_lambda(w, skip_z) + self.log_lambda(w - eta)
        if self.spec.is_open:
            return _wrap(self.log_qdet(w) - _logsum([w + eta / 2, w - eta / 2]) - both)
        return _wrap(both - n * _logsum([w + eta, w - eta]))

    def boundary_pair(self, z1: float, chi1: float) -> tuple:
        """(ratio log residual, predicted delta) for the pair z1, chi1 = z1 - 1/2 + delta.

        The z1 equation carries the factor (u1 - eta chi1) = -delta eta and the
        chi1 equation the factor (eta chi1 - eta z1 + eta/2) = delta eta.
        """
        eta = self.eta
        zr, wr = eta * z1, eta * chi1
        lz = self.z_equation(zr, skip_w=wr)
        lw = self.w_equation(wr, skip_z=zr)
        # lz - log(-delta eta) = 0 and lw - log(delta eta) = 0
        ratio = lz - lw + 1j * math.pi
        delta = (-np.exp(complex(np.clip(lz.real, -700, 700), lz.imag)) / eta).real
        return _wrap(ratio), float(delta)


def _real_residual(log_ratio: complex) -> float:
    """Signed residual for an equation whose two sides are real: ratio - 1."""
    return float(np.exp(np.clip(log_ratio.real, -LOG_CLIP, LOG_CLIP)) * math.cos(log_ratio.imag) - 1.0)


def residuals(system: BaeSystem, unknowns) -> np.ndarray:
    """Real residual vector (length system.size); zero iff the packed roots solve the equations."""
    x = np.asarray(unknowns, dtype=float)
    if x.shape != (system.size,) or not np.all(np.isfinite(x)):
        raise ValueError("unknowns must be a finite vector of the system size")
    rs = system.unpack(x)
    eq = _Equations(system.spec, rs.z_roots(), rs.w_roots())
    eta = system.spec.eta
    out = []
    for c, d in zip(rs.z_centers, rs.z_deviations):
        r = eq.z_equation(c + eta * (1 + d))
        out += [r.real, r.imag]
    if system.is_open:
        chi1, chi2 = rs.boundary_w
        ratio, delta = eq.boundary_pair(rs.boundary_z, chi1)
        out.append(_real_residual(ratio))
    for c, d in zip(rs.w_centers, rs.w_deviations):
        r = eq.w_equation(c + 1.5 * eta * (1 + d))
        out += [r.real, r.imag]
    if system.is_open:
        out.append(delta - (chi1 - rs.boundary_z + 0.5))
        out.append(_real_residual(eq.w_equation(eta * chi2)))
    return np.array(out)


def bae_residual(roots: RootSet, spec: ChainSpec) -> float:
    """Max |residual| of the root equations for a string-structured root set."""
    system = BaeSystem(spec.homogeneous_copy())
    return float(np.abs(residuals(system, system.pack(roots))).max())


# seeds


def density_quantile(f):
    """Inverse cumulative of rho(lambda) = 1/(2 cosh pi lambda) normalised to unit mass."""
    return np.arcsinh(np.tan(np.pi * (np.asarray(f, dtype=float) - 0.5))) / np.pi


@dataclass(frozen=True)
class DensityQuantile:
    pass


@dataclass(frozen=True)
class Continuation:
    source: "SolveReport"


def default_boundary_seeds(boundary: Open, eta) -> tuple:
    """(z1, chi1, chi2) guesses from the boundary fields in units of eta."""
    ap = abs(boundary.p / eta)
    aq = abs(boundary.qbar / eta)
    # min(ap, aq) + 0.5 sits exactly on a common zero of both sides; step off it
    z1 = min(ap, aq) + 0.5 - 0.03
    return z1, z1 - 0.5, z1 + 0.6


def seed_roots(spec: ChainSpec, strategy=DensityQuantile()) -> np.ndarray:
    """Initial unknown vector: density-quantile centers, near-exact strings."""
    system = BaeSystem(spec.homogeneous_copy())
    n, m = spec.n_sites, system.n_strings
    if spec.is_open:
        # positive half of the mirrored 2N-site chain
        centers = density_quantile(0.5 + np.arange(1, m + 1) / (n + 1))
    else:
        centers = density_quantile((np.arange(1, m + 1) - 0.5) / m)
    wdev = np.full(m, SEED_W_DEVIATION)
    zdev = np.full(m, SEED_Z_DEVIATION)
    if not spec.is_open:
        if isinstance(strategy, Continuation) and strategy.source.is_open:
            raise ValueError("continuation source has a different boundary kind")
        return np.concatenate([centers, zdev, centers, wdev])
    if isinstance(strategy, Continuation):
        src = strategy.source
        if not src.is_open:
            raise ValueError("continuation source has a different boundary kind")
        z1, (chi1, chi2) = src.roots.boundary_z, src.roots.boundary_w
    else:
        z1, chi1, chi2 = default_boundary_seeds(spec.boundary, spec.eta)
    return np.concatenate([centers, zdev, [z1], centers, wdev, [chi1 - z1 + 0.5, chi2]])


# Newton


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    final_residual: float
    damping: list
    roots: RootSet
    energy: float
    unknowns: np.ndarray
    tol: float
    max_iter: int
    is_open: bool = False
    message: str = ""

    def to_record(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "damping": list(self.damping),
            "energy": self.energy,
            "unknowns": [float(v) for v in self.unknowns],
            "roots": self.roots.to_record(),
            "message": self.message,
            "tolerances": {"tol": self.tol, "max_iter": self.max_iter, "fd_step": FD_STEP,
                           "max_halvings": MAX_HALVINGS},
        }


def _jacobian(system: BaeSystem, x: np.ndarray) -> np.ndarray:
    cols = []
    for i in range(len(x)):
        h = FD_STEP * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((residuals(system, xp) - residuals(system, xm)) / (2 * h))
    return np.column_stack(cols)


def _safe_norm(system, x) -> tuple:
    try:
        r = residuals(system, x)
    except SingularityError:
        return None, math.inf
    return r, float(np.linalg.norm(r))


def newton_solve(system: BaeSystem, seed, tol: float = 1e-12, max_iter: int = 200) -> SolveReport:
    """Damped Newton with central finite-difference Jacobian and step halving."""
    x = np.array(seed, dtype=float)
    if x.shape != (system.size,):
        raise ValueError(f"seed has {x.size} entries, system needs {system.size}")
    r, norm = _safe_norm(system, x)
    if r is None:
        raise SingularityError("seed lies on a pole of the root equations")
    damping, it, message = [], 0, ""
    while np.abs(r).max() > tol and it < max_iter:
        jac = _jacobian(system, x)
        if not np.all(np.isfinite(jac)) or np.linalg.cond(jac) > 1e14:
            raise ConditioningError("Jacobian of the root equations is singular")
        dx = np.linalg.solve(jac, -r)
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            rn, nn = _safe_norm(system, x + lam * dx)
            if nn < norm:
                break
            lam *= 0.5
        else:
            message = "line search failed to reduce the residual"
            break
        x, r, norm = x + lam * dx, rn, nn
        damping.append(lam)
        it += 1
    final = float(np.abs(r).max())
    converged = final <= tol
    if not converged and not message:
        message = "maximum iterations reached"
    roots = system.unpack(x)
    roots.bae_residual = bae_residual(roots, system.spec)
    try:
        energy = energy_from_roots(roots, system.spec)
    except ConsistencyError:
        energy = math.nan
    return SolveReport(converged, it, final, damping, roots, energy, x, tol, max_iter,
                       is_open=system.is_open, message=message)


# energies


def energy_from_roots(roots: RootSet, spec: ChainSpec) -> float:
    """Energy from the Lambda zero roots (z-plane)."""
    eta, n = spec.eta, spec.n_sites
    z = roots.z_roots()
    if spec.is_open:
        e = 0.5 * np.sum(eta**2 / (eta**2 / 4 - z**2)) - n
    else:
        e = -2 * eta * np.sum(1 / (z - eta / 2)) - n
    if abs(e.imag) > 1e-6:
        raise ConsistencyError(f"energy has imaginary part {e.imag:.2e}")
    return float(e.real)


def lambda_polynomial(roots: RootSet, spec: ChainSpec) -> SpectralPolynomial:
    """Lambda (open: Lambda-bar) rebuilt from the roots, leading coefficient 2."""
    kind = Kind.LAMBDA_OPEN if spec.is_open else Kind.LAMBDA
    return SpectralPolynomial.from_roots(kind, roots.lambda_roots(), 2.0)
