"""Eigenvalue polynomials of the commuting family on exact eigenstates.

Ground states come from dense diagonalization of the Pauli Hamiltonian.  The
eigenvalues Lambda(u), W(u) (open: Lambda-bar, W-bar) are sampled as expectation
values at Chebyshev nodes, fitted in a Chebyshev basis, rooted through the
colleague matrix and polished by Newton iteration on the barycentric form of
the fitted polynomial.  Open-chain polynomials are even in v = u + shift and are
fitted in s = v^2.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment

from twlab.chainops import (
    ChainSpec,
    apply_operator,
    hamiltonian,
    scalar_fns,
    transfer_open,
    transfer_periodic,
    w_operator_open,
    w_operator_periodic,
)
from twlab.densecore import hermitian_eigs
from twlab.errors import (
    ClassificationError,
    ConditioningError,
    ContractError,
    DegeneracyError,
    ModeError,
    RefinementError,
    RootQualityError,
)

REFINE_U0 = 0.3142
VARIANCE_TOL = 1e-8
REFINE_TOL = 1e-9
FIT_TOL = 1e-9
ROOT_RESIDUAL_TOL = 1e-8
PAIR_CENTER_TOL = 1e-6
PAIR_TEMPLATE_TOL = 0.25
N_VALIDATION = 8


class Kind(enum.Enum):
    LAMBDA = "Lambda"
    W = "W"
    LAMBDA_OPEN = "LambdaOpen"
    W_OPEN = "WOpen"

    @property
    def is_open(self) -> bool:
        return self in (Kind.LAMBDA_OPEN, Kind.W_OPEN)

    @property
    def operator(self) -> str:
        return {"Lambda": "t", "W": "w", "LambdaOpen": "to", "WOpen": "wo"}[self.value]

    def degree(self, n: int) -> int:
        return {"Lambda": n, "W": n, "LambdaOpen": 2 * n + 2, "WOpen": 2 * n + 4}[self.value]

    def leading(self, spec: ChainSpec) -> complex:
        if self is Kind.W_OPEN:
            return complex(spec.boundary.xi) ** 2 - 3
        return 3.0 if self is Kind.W else 2.0

    def shift(self, eta) -> complex:
        """Offset making the open polynomial even in u + shift."""
        return eta / 2 if self is Kind.LAMBDA_OPEN else 0.0


# (center, half-width) of the Chebyshev node interval in the fit variable.
# Lambda is centered on u = -eta/2, midway between its two root lines.
# Open kinds fit in s = (u + shift)^2; W-bar avoids s = 0 where fused K is 0/0.
FIT_INTERVALS = {
    Kind.LAMBDA: (None, 1.5),
    Kind.W: (0.0, 2.0),
    Kind.LAMBDA_OPEN: (0.0, 4.0),
    Kind.W_OPEN: (-0.2, 4.0),
}


def _check_kind(kind: Kind, spec: ChainSpec) -> None:
    if kind.is_open != spec.is_open:
        raise ModeError(f"{kind.value} does not match the boundary of the spec")


# ground states


@functools.lru_cache(maxsize=32)
def _ground_state_cached(spec: ChainSpec):
    h = hamiltonian(spec)
    w, v = hermitian_eigs(h, select=(0, 0))
    return float(w[0]), _fix_phase(v[:, 0].astype(complex))


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    vec = vec / np.linalg.norm(vec)
    k = int(np.argmax(np.abs(vec) > 0.5 * np.abs(vec).max()))
    return vec * (abs(vec[k]) / vec[k])


def ground_state(spec: ChainSpec):
    """Lowest eigenpair (energy, unit vector) of the Pauli Hamiltonian."""
    if not spec.physical:
        raise ContractError("Hamiltonian is not Hermitian for these parameters")
    energy, vec = _ground_state_cached(spec)
    return energy, vec.copy()


def spectrum(spec: ChainSpec) -> np.ndarray:
    if not spec.physical:
        raise ContractError("Hamiltonian is not Hermitian for these parameters")
    return hermitian_eigs(hamiltonian(spec))[0]


# sampling


def eigenvalue_samples(state, kind: Kind, spec: ChainSpec, points) -> np.ndarray:
    """<state|O(u)|state> for each u, with an eigenvector check at every point."""
    _check_kind(kind, spec)
    state = np.asarray(state, dtype=complex)
    norm2 = np.vdot(state, state).real
    out = []
    for u in points:
        ov = apply_operator(kind.operator, complex(u), spec, state)
        val = np.vdot(state, ov) / norm2
        resid = np.linalg.norm(ov - val * state)
        if resid > VARIANCE_TOL * max(1.0, np.linalg.norm(ov), _rounding_scale(kind, u, spec)):
            raise DegeneracyError(
                f"state is not an eigenvector of {kind.operator}({complex(u)}) "
                f"(residual {resid:.2e}); refine the degenerate block first"
            )
        out.append(val)
    return np.array(out, dtype=complex)


def _rounding_scale(kind: Kind, u, spec: ChainSpec) -> float:
    """Rough product of local operator norms: the magnitude rounding errors scale with."""
    size = abs(u) + 2 * abs(spec.eta) + max(abs(t) for t in spec.thetas)
    if spec.is_open:
        b = spec.boundary
        size += max(abs(b.p), abs(b.q))
    return float(size ** kind.degree(spec.n_sites)) * 1e-7


def refine_in_degenerate_block(vectors, spec: ChainSpec, u0=REFINE_U0) -> np.ndarray:
    """Rotate an orthonormal basis of one H eigenspace onto eigenvectors of t(u0)."""
    v = np.asarray(vectors, dtype=complex)
    if v.ndim == 1 or v.shape[1] == 1:
        return v
    op = "to" if spec.is_open else "t"
    tv = apply_operator(op, complex(u0), spec, v)
    block = v.conj().T @ tv
    scale = max(1.0, np.abs(block).max())
    leak = np.abs(tv - v @ block).max()
    if leak > REFINE_TOL * max(1.0, np.abs(tv).max()):
        raise RefinementError(f"span is not invariant under the transfer matrix (leak {leak:.2e})")
    k = block.shape[0]
    if np.abs(block - np.trace(block) / k * np.eye(k)).max() <= REFINE_TOL * scale:
        return v
    t, z = scipy.linalg.schur(block, output="complex")
    off = np.abs(np.triu(t, 1)).max()
    if off > REFINE_TOL * scale:
        raise RefinementError(f"block is not normal (off-diagonal {off:.2e})")
    diag = np.diag(t)
    order = sorted(range(k), key=lambda i: (round(diag[i].real, 9), round(diag[i].imag, 9)))
    out = v @ z[:, order]
    return np.column_stack([_fix_phase(out[:, i]) for i in range(k)])


# polynomials


def _cheb_nodes(m: int) -> np.ndarray:
    return np.cos(np.pi * (np.arange(m) + 0.5) / m)


def _validation_nodes(m: int = N_VALIDATION) -> np.ndarray:
    k = np.arange(m)
    return 0.9 * np.cos(np.pi * (k + 0.5) / m) + 0.06j * (-1.0) ** k


def _bary_weights(m: int) -> np.ndarray:
    k = np.arange(m)
    return (-1.0) ** k * np.sin(np.pi * (k + 0.5) / m)


@dataclass(frozen=True)
class SpectralPolynomial:
    """Polynomial Lambda/W of one eigenstate.

    ``coefficients`` are ascending monomials in u; open kinds are additionally
    held as a Chebyshev series in s = (u + shift)^2 on ``interval``.
    """

    kind: Kind
    degree: int
    sample_points: np.ndarray
    sample_values: np.ndarray
    coefficients: np.ndarray
    roots: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    shift: complex = 0.0
    interval: tuple = (0.0, 1.0)
    cheb: np.ndarray | None = None
    fit_residual: float = 0.0

    @property
    def even(self) -> bool:
        return self.kind.is_open

    @property
    def leading(self) -> complex:
        return complex(self.coefficients[-1])

    @property
    def scale(self) -> float:
        return float(np.abs(self.sample_values).max()) if len(self.sample_values) else 1.0

    def to_x(self, u):
        u = np.asarray(u, dtype=complex)
        return (u + self.shift) ** 2 if self.even else u

    def __call__(self, u):
        if self.cheb is None:
            return P.polyval(np.asarray(u, dtype=complex), self.coefficients)
        c, h = self.interval
        return C.chebval((self.to_x(u) - c) / h, self.cheb)

    def to_record(self) -> dict:
        return {
            "kind": self.kind.value,
            "degree": self.degree,
            "shift": _cjson(self.shift),
            "even_variable": self.even,
            "sample_points": [_cjson(x) for x in self.sample_points],
            "sample_values": [_cjson(x) for x in self.sample_values],
            "coefficients": [_cjson(x) for x in self.coefficients],
            "roots": [_cjson(x) for x in self.roots],
            "fit_residual": self.fit_residual,
            "tolerances": {"fit": FIT_TOL, "root_residual": ROOT_RESIDUAL_TOL},
        }

    @classmethod
    def from_roots(cls, kind: Kind, roots, leading=1.0):
        """Polynomial leading * prod(u - r) without sample data."""
        roots = np.asarray(roots, dtype=complex)
        coeffs = leading * np.poly(roots)[::-1] if len(roots) else np.array([leading], complex)
        return cls(kind, len(roots), np.zeros(0, complex), np.zeros(0, complex),
                   np.asarray(coeffs, dtype=complex), roots)


def _cjson(z):
    z = complex(z)
    return [z.real, z.imag]


def fit_interval(kind: Kind, spec: ChainSpec):
    c, h = FIT_INTERVALS[kind]
    return (-spec.eta / 2 if c is None else c), h


def sample_points(kind: Kind, spec: ChainSpec):
    """(fit nodes, validation points) in the u-plane."""
    c, h = fit_interval(kind, spec)
    m = kind.degree(spec.n_sites) // (2 if kind.is_open else 1) + 1
    nodes, check = c + h * _cheb_nodes(m), c + h * _validation_nodes()
    if kind.is_open:
        back = lambda x: np.sqrt(np.asarray(x, dtype=complex)) - kind.shift(spec.eta)
        return back(nodes), back(check)
    return nodes.astype(complex), check.astype(complex)


def fit_polynomial(points, values, kind: Kind, spec: ChainSpec, validation=None,
                   interval=None) -> SpectralPolynomial:
    """Chebyshev fit of the kind's degree (interpolation when len(points) = degree+1).

    ``validation`` = (points, values) are only checked, never fitted; ``interval``
    = (center, half-width) of the fit variable, inferred from the points if omitted.
    Every sample must be reproduced to FIT_TOL relative.
    """
    _check_kind(kind, spec)
    points = np.asarray(points, dtype=complex)
    values = np.asarray(values, dtype=complex)
    deg = kind.degree(spec.n_sites)
    shift = kind.shift(spec.eta)
    dx = deg // 2 if kind.is_open else deg

    def to_x(u):
        u = np.asarray(u, dtype=complex)
        return (u + shift) ** 2 if kind.is_open else u

    x = to_x(points)
    if len(np.unique(np.round(x, 12))) < dx + 1:
        raise ConditioningError(f"need {dx + 1} distinct sample points, got fewer")
    if interval is None:
        c = complex(0.5 * (x.real.max() + x.real.min()), float(np.median(x.imag)))
        h = 0.5 * (x.real.max() - x.real.min()) or max(1.0, float(np.abs(x - c).max()))
    else:
        c, h = complex(interval[0]), float(interval[1])
    vander = C.chebvander((x - c) / h, dx)
    if np.linalg.cond(vander) > 1e12:
        raise ConditioningError("sample set is rank deficient for this degree")
    cheb = np.linalg.lstsq(vander, values, rcond=None)[0]
    scale = float(np.abs(values).max()) or 1.0
    resid = float(np.abs(vander @ cheb - values).max() / scale)
    all_pts, all_vals = points, values
    if validation is not None:
        vp = np.asarray(validation[0], dtype=complex)
        vv = np.asarray(validation[1], dtype=complex)
        pred = C.chebval((to_x(vp) - c) / h, cheb)
        resid = max(resid, float(np.abs(pred - vv).max() / max(scale, np.abs(vv).max())))
        all_pts, all_vals = np.concatenate([points, vp]), np.concatenate([values, vv])
    if resid > FIT_TOL:
        raise ConditioningError(f"fit does not reproduce samples (relative residual {resid:.2e})")
    poly_x = np.polynomial.Polynomial(C.cheb2poly(cheb))(np.polynomial.Polynomial([-c / h, 1 / h]))
    if kind.is_open:
        poly_u = poly_x(np.polynomial.Polynomial([shift, 1.0]) ** 2)
    else:
        poly_u = poly_x
    coeffs = np.zeros(deg + 1, dtype=complex)
    coeffs[: len(poly_u.coef)] = poly_u.coef[: deg + 1]
    return SpectralPolynomial(kind, deg, all_pts, all_vals, coeffs, shift=shift,
                              interval=(c, h), cheb=cheb, fit_residual=resid)


def _bary_eval(z, nodes, vals, w):
    d = z - nodes
    k = np.argmin(np.abs(d))
    if abs(d[k]) < 1e-14 * max(1.0, abs(z)):
        return vals[k], None
    q = w / d
    s = q.sum()
    pz = (q * vals).sum() / s
    dp = (q * (pz - vals) / d).sum() / s
    return pz, dp


def find_roots(poly: SpectralPolynomial, max_newton: int = 60) -> SpectralPolynomial:
    """Colleague-matrix roots polished by Newton on the barycentric interpolant."""
    if poly.cheb is None:
        raise ValueError("polynomial has no fitted Chebyshev data")
    c, h = poly.interval
    m = len(poly.cheb)
    nodes_t = _cheb_nodes(m)
    vals = C.chebval(nodes_t, poly.cheb)
    w = _bary_weights(m)
    scale = poly.scale
    polished = []
    for t0 in C.chebroots(poly.cheb).astype(complex):
        t = t0
        for _ in range(max_newton):
            pz, dp = _bary_eval(t, nodes_t, vals, w)
            if dp is None or dp == 0:
                break
            step = pz / dp
            t = t - step
            if not np.isfinite(t) or abs(t - t0) > 1.0 + abs(t0):
                raise RootQualityError(f"Newton diverged from root {c + h * t0}", root=c + h * t0)
            if abs(step) <= 1e-15 * max(1.0, abs(t)):
                break
        res = abs(_bary_eval(t, nodes_t, vals, w)[0])
        if res > ROOT_RESIDUAL_TOL * scale:
            raise RootQualityError(f"root {c + h * t} has residual {res:.2e}", root=c + h * t)
        polished.append(c + h * t)
    xr = np.array(polished, dtype=complex)
    if poly.even:
        v = np.sqrt(xr)
        u = np.concatenate([v, -v]) - poly.shift
    else:
        u = xr
    return replace(poly, roots=_sorted_roots(u))


def _sorted_roots(r) -> np.ndarray:
    r = np.asarray(r, dtype=complex)
    return r[np.lexsort((np.round(r.imag, 9), np.round(r.real, 9)))]


def symmetry_maps(kind: Kind, eta):
    """Root-set symmetries of each polynomial kind."""
    if kind is Kind.LAMBDA:
        return {"conj_shift": lambda r: np.conj(r) - eta}
    if kind is Kind.W:
        return {"conj": np.conj}
    if kind is Kind.LAMBDA_OPEN:
        return {"crossing": lambda r: -r - eta}
    return {"reflection": lambda r: -r, "conj": np.conj}


def multiset_distance(a, b) -> float:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if len(a) != len(b):
        return math.inf
    if len(a) == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(cost)
    return float(cost[i, j].max())


def symmetry_defects(poly: SpectralPolynomial, spec: ChainSpec) -> dict:
    return {name: multiset_distance(poly.roots, f(poly.roots))
            for name, f in symmetry_maps(poly.kind, spec.eta).items()}


def polish_roots_on_state(poly: SpectralPolynomial, state, spec: ChainSpec,
                          max_iter: int = 6) -> SpectralPolynomial:
    """Newton on the roots with the eigenvalue evaluated directly from the state.

    Interpolant roots far from the fit interval inherit amplified sample noise;
    evaluating the operator at the root itself avoids that amplification.
    """
    r = np.array(poly.roots, dtype=complex)
    prev = math.inf
    for _ in range(max_iter):
        vals = eigenvalue_samples(state, poly.kind, spec, r)
        deriv = np.array([poly.leading * np.prod(np.delete(rk - r, k)) for k, rk in enumerate(r)])
        step = vals / deriv
        size = float(np.abs(step).max())
        if not np.isfinite(size) or size > max(prev, 1e-6):
            raise RootQualityError(f"state polish diverged (step {size:.2e})")
        r = r - step
        prev = size
        if size <= 1e-14 * max(1.0, float(np.abs(r).max())):
            break
    return replace(poly, roots=_sorted_roots(r))


def state_polynomial(state, kind: Kind, spec: ChainSpec) -> SpectralPolynomial:
    nodes, check = sample_points(kind, spec)
    vals = eigenvalue_samples(state, kind, spec, nodes)
    cvals = eigenvalue_samples(state, kind, spec, check)
    poly = fit_polynomial(nodes, vals, kind, spec, validation=(check, cvals),
                          interval=fit_interval(kind, spec))
    return polish_roots_on_state(find_roots(poly), state, spec)


@functools.lru_cache(maxsize=32)
def _ground_polys_cached(spec: ChainSpec):
    _, psi = ground_state(spec)
    kinds = (Kind.LAMBDA_OPEN, Kind.W_OPEN) if spec.is_open else (Kind.LAMBDA, Kind.W)
    return tuple(state_polynomial(psi, k, spec) for k in kinds)


def ground_state_polynomials(spec: ChainSpec):
    """(Lambda, W) polynomials of the ground state (open: Lambda-bar, W-bar)."""
    return _ground_polys_cached(spec)


def tw_scalar_residual(lam: SpectralPolynomial, w: SpectralPolynomial, spec: ChainSpec, points) -> float:
    """Max relative residual of the eigenvalue t-W relation at the given points."""
    f = scalar_fns(spec)
    eta = spec.eta
    th = np.array(spec.thetas)
    worst = 0.0
    for u in points:
        if spec.is_open:
            lhs = f.qdet_open(u) - (u + eta / 2) * (u - eta / 2) * lam(u) * lam(u - eta)
            rhs = u**2 * np.prod((u - th) * (u + th)) * w(u)
            scale = max(abs(f.qdet_open(u)), abs(rhs))
        else:
            lhs = lam(u) * lam(u - eta) - f.a(u) * f.d(u - eta)
            rhs = f.d(u) * w(u)
            scale = max(abs(lam(u) * lam(u - eta)), abs(rhs))
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


# root classification


@dataclass
class RootSet:
    """Roots organised as 2-strings c +- eta*(1+dev)*h (h = 1 for z, 3/2 for w),
    plus imaginary-axis boundary roots +-eta*z1 and +-eta*chi for open chains.

    z-roots live in the plane z = zeta + eta/2 with zeta the roots of Lambda.
    """

    eta: complex
    is_open: bool
    z_centers: list = field(default_factory=list)
    z_deviations: list = field(default_factory=list)
    w_centers: list = field(default_factory=list)
    w_deviations: list = field(default_factory=list)
    boundary_z: float | None = None
    boundary_w: tuple | None = None
    bae_residual: float = math.nan

    def _strings(self, centers, devs, height):
        out = []
        for c, d in zip(centers, devs):
            for sgn in (1, -1):
                r = c + sgn * self.eta * height * (1 + d)
                out.extend([r, -np.conj(r)] if self.is_open else [r])
        return out

    def z_roots(self) -> np.ndarray:
        r = self._strings(self.z_centers, self.z_deviations, 1.0)
        if self.is_open and self.boundary_z is not None:
            r += [self.eta * self.boundary_z, -self.eta * self.boundary_z]
        return _sorted_roots(r)

    def w_roots(self) -> np.ndarray:
        r = self._strings(self.w_centers, self.w_deviations, 1.5)
        if self.is_open and self.boundary_w is not None:
            for chi in self.boundary_w:
                r += [self.eta * chi, -self.eta * chi]
        return _sorted_roots(r)

    def lambda_roots(self) -> np.ndarray:
        """Zeros of Lambda in the spectral-parameter plane (z - eta/2)."""
        return _sorted_roots(self.z_roots() - self.eta / 2)

    def to_record(self) -> dict:
        return {
            "boundary": "open" if self.is_open else "periodic",
            "z_centers": list(map(float, self.z_centers)),
            "z_deviations": list(map(float, self.z_deviations)),
            "w_centers": list(map(float, self.w_centers)),
            "w_deviations": list(map(float, self.w_deviations)),
            "boundary_z": self.boundary_z,
            "boundary_w": list(self.boundary_w) if self.boundary_w else None,
            "bae_residual": None if math.isnan(self.bae_residual) else self.bae_residual,
            "z_roots": [_cjson(r) for r in self.z_roots()],
            "w_roots": [_cjson(r) for r in self.w_roots()],
            "tolerances": {"center": PAIR_CENTER_TOL, "template": PAIR_TEMPLATE_TOL},
        }


def _pair_strings(roots, kappa, height, is_open, n_axis):
    """Split roots into (centers, deviations, axis heights)."""
    roots = np.asarray(roots, dtype=complex)
    y = roots.imag / kappa
    on_axis = np.abs(roots.real) <= PAIR_CENTER_TOL if is_open else np.zeros(len(roots), bool)
    axis = roots[on_axis]
    rest = roots[~on_axis]
    yr = y[~on_axis]
    cand = rest.real > 0 if is_open else np.ones(len(rest), bool)
    upper = [i for i in np.argsort(rest.real) if cand[i] and yr[i] > 0]
    lower = {i for i in range(len(rest)) if cand[i] and yr[i] < 0}
    centers, devs = [], []
    for i in upper:
        best = None
        for j in lower:
            dc = abs(rest[i].real - rest[j].real)
            if (dc <= PAIR_CENTER_TOL and abs(yr[i] - height) <= PAIR_TEMPLATE_TOL
                    and abs(yr[j] + height) <= PAIR_TEMPLATE_TOL and (best is None or dc < best[0])):
                best = (dc, j)
        if best is None:
            raise ClassificationError(f"root {rest[i]} has no string partner")
        lower.discard(best[1])
        centers.append(0.5 * (rest[i].real + rest[best[1]].real))
        devs.append(yr[i] / height - 1.0)
    expected_rest = 4 * len(centers) if is_open else 2 * len(centers)
    if expected_rest != len(rest):
        raise ClassificationError(f"{len(rest) - expected_rest} roots left unpaired")
    heights = sorted(float(abs(r.imag) / kappa) for r in axis if r.imag / kappa > 0)
    if len(axis) != 2 * n_axis or len(heights) != n_axis:
        raise ClassificationError(f"expected {n_axis} boundary pairs, found {len(axis)} axis roots")
    return centers, devs, heights


def classify_strings(lam: SpectralPolynomial | None, w: SpectralPolynomial | None, spec: ChainSpec) -> RootSet:
    """Pair Lambda and W roots into 2-strings (and boundary pairs for open chains)."""
    eta = spec.eta
    if abs(eta.real) > 1e-12 * abs(eta) or eta.imag <= 0:
        raise ClassificationError("string classification needs eta on the positive imaginary axis")
    kappa = eta.imag
    rs = RootSet(eta=eta, is_open=spec.is_open)
    if lam is not None:
        c, d, ax = _pair_strings(lam.roots + eta / 2, kappa, 1.0, spec.is_open, 1 if spec.is_open else 0)
        rs.z_centers, rs.z_deviations = c, d
        rs.boundary_z = ax[0] if spec.is_open else None
    if w is not None:
        c, d, ax = _pair_strings(w.roots, kappa, 1.5, spec.is_open, 2 if spec.is_open else 0)
        rs.w_centers, rs.w_deviations = c, d
        rs.boundary_w = tuple(ax) if spec.is_open else None
    return rs


# identity suite

IDENTITY_THRESHOLDS = {
    "tw_operator": 1e-10,
    "inhomogeneous_points": 1e-10,
    "commutativity_tt": 1e-10,
    "commutativity_tw": 1e-10,
    "hermiticity_t": 1e-10,
    "hermiticity_w": 1e-10,
    "open_tw_operator": 1e-9,
    "open_inhomogeneous_points": 1e-10,
    "open_crossing": 1e-10,
    "open_commutativity": 1e-10,
    "open_hermiticity": 1e-10,
}


@dataclass
class IdentityResidual:
    name: str
    residual: float
    threshold: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.residual <= self.threshold


@dataclass
class IdentityReport:
    spec: ChainSpec
    entries: list

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if not e.passed]

    def residuals(self) -> dict:
        return {e.name: e.residual for e in self.entries}


def rel_diff(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    scale = max(np.abs(a).max(), np.abs(b).max())
    return float(np.abs(a - b).max() / scale) if scale > 0 else 0.0


def open_tw_rhs(u, spec: ChainSpec, coefficient: str = "theta_product") -> np.ndarray:
    """Right side of the open operator identity for t^o(u) t^o(u-eta).

    ``coefficient`` selects the factor multiplying 4u^2/rho2(2u-eta) W^o(u):
    ``"theta_product"`` = prod (u-theta)(u+theta) (holds identically) or
    ``"d_open"`` = d^o(u) (kept for comparison; does not hold).
    """
    f = scalar_fns(spec)
    eta = spec.eta
    th = np.array(spec.thetas)
    coef = np.prod((u - th) * (u + th)) if coefficient == "theta_product" else f.d_open(u)
    dim = 2**spec.n_sites
    return (f.qdet_open(u) / ((u + eta / 2) * (u - eta / 2)) * np.eye(dim)
            + 4 * u**2 / f.rho2(2 * u - eta) * coef * w_operator_open(u, spec))


def _hermiticity_applies(spec: ChainSpec) -> bool:
    real_th = all(abs(t.imag) <= 1e-14 for t in spec.thetas)
    imag_eta = abs(spec.eta.real) <= 1e-14 * abs(spec.eta)
    return real_th and imag_eta and spec.physical


def verify_identity_suite(spec: ChainSpec, trial_points) -> IdentityReport:
    """Max relative residual of every operator identity over the trial points."""
    if spec.n_sites > 8:
        raise ValueError("identity suite is limited to N <= 8")
    pts = [complex(u) for u in trial_points]
    pairs = list(zip(pts, pts[1:] + pts[:1]))
    eta = spec.eta
    f = scalar_fns(spec)
    dim = 2**spec.n_sites
    eye = np.eye(dim)
    worst: dict[str, float] = {}

    def rec(name, value):
        worst[name] = max(worst.get(name, 0.0), value)

    def comm(a, b):
        ab = a @ b
        return float(np.abs(ab - b @ a).max() / (np.abs(a).max() * np.abs(b).max()))

    herm = _hermiticity_applies(spec)
    if not spec.is_open:
        cache = {u: transfer_periodic(u, spec) for u in pts}
        for u in pts:
            t, ts = cache[u], transfer_periodic(u - eta, spec)
            w = w_operator_periodic(u, spec)
            rec("tw_operator", rel_diff(t @ ts, f.a(u) * f.d(u - eta) * eye + f.d(u) * w))
            if herm:
                rec("hermiticity_t", rel_diff(t.conj().T, transfer_periodic(np.conj(u) - eta, spec)))
                rec("hermiticity_w", rel_diff(w.conj().T, w_operator_periodic(np.conj(u), spec)))
        for th in spec.thetas:
            lhs = transfer_periodic(th, spec) @ transfer_periodic(th - eta, spec)
            rec("inhomogeneous_points", rel_diff(lhs, f.a(th) * f.d(th - eta) * eye))
        for u, v in pairs:
            rec("commutativity_tt", comm(cache[u], cache[v]))
            rec("commutativity_tw", comm(cache[u], w_operator_periodic(v, spec)))
    else:
        cache = {u: transfer_open(u, spec) for u in pts}
        for u in pts:
            t = cache[u]
            rec("open_tw_operator", rel_diff(t @ transfer_open(u - eta, spec), open_tw_rhs(u, spec)))
            rec("open_crossing", rel_diff(t, transfer_open(-u - eta, spec)))
            if herm:
                rec("open_hermiticity", rel_diff(t.conj().T, transfer_open(-np.conj(u), spec)))
        for th in spec.thetas:
            lhs = (th + eta / 2) * (th - eta / 2) * transfer_open(th, spec) @ transfer_open(th - eta, spec)
            rec("open_inhomogeneous_points", rel_diff(lhs, f.qdet_open(th) * eye))
        for u, v in pairs:
            rec("open_commutativity", comm(cache[u], cache[v]))
    detail = f"N={spec.n_sites} eta={spec.eta} boundary={spec.boundary}"
    entries = [IdentityResidual(k, v, IDENTITY_THRESHOLDS[k], detail) for k, v in worst.items()]
    return IdentityReport(spec, entries)
