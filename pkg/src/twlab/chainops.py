"""Model operators of the XXX chain: R, K, their fusions, transfer matrices,
the fused W operators, Hamiltonians and the scalar quantum-determinant functions.

Site j (0-based internally) is the j-th tensor factor from the left, i.e. the
most significant bit of a basis index; bit value 0 is spin up.  Transfer
matrices are assembled by contracting L-operators one site at a time against
a batch of vectors, never by forming aux (x) quantum Kronecker products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from twlab.densecore import check_dim
from twlab.errors import ModeError, NumericalError

SQRT2 = math.sqrt(2.0)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PERMUTATION = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
P_PLUS = 0.5 * (np.eye(4) + PERMUTATION)
P_MINUS = 0.5 * (np.eye(4) - PERMUTATION)

# columns: |11>, (|12>+|21>)/sqrt2, |22> inside C^2 (x) C^2
SYM_ISOMETRY = np.zeros((4, 3))
SYM_ISOMETRY[0, 0] = 1.0
SYM_ISOMETRY[1, 1] = SYM_ISOMETRY[2, 1] = 1 / SQRT2
SYM_ISOMETRY[3, 2] = 1.0

FUSED_U0_EPS = 1e-6


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True)
class Open:
    """Open boundary fields; ``q`` is the raw parameter, ``qbar = q/sqrt(1+xi^2)``."""

    p: complex
    q: complex
    xi: complex = 1.0

    @classmethod
    def from_qbar(cls, p, qbar, xi=1.0):
        return cls(complex(p), complex(qbar) * np.sqrt(1 + complex(xi) ** 2), complex(xi))

    @property
    def qbar(self) -> complex:
        return complex(self.q / np.sqrt(1 + complex(self.xi) ** 2))


Boundary = Union[Periodic, Open]


@dataclass(frozen=True)
class ChainSpec:
    n_sites: int
    eta: complex = 1j
    thetas: tuple = field(default=None)
    boundary: Boundary = Periodic()

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        if self.eta == 0:
            raise ValueError("eta must be nonzero")
        th = (0.0,) * self.n_sites if self.thetas is None else tuple(complex(t) for t in self.thetas)
        if len(th) != self.n_sites:
            raise ValueError(f"expected {self.n_sites} thetas, got {len(th)}")
        object.__setattr__(self, "thetas", tuple(complex(t) for t in th))
        object.__setattr__(self, "eta", complex(self.eta))

    @property
    def is_open(self) -> bool:
        return isinstance(self.boundary, Open)

    @property
    def homogeneous(self) -> bool:
        return all(t == 0 for t in self.thetas)

    @property
    def physical(self) -> bool:
        """Whether the Hamiltonian is Hermitian (p* = -p, q* = -q, xi real, eta imaginary)."""
        if not self.is_open:
            return True
        b, tol = self.boundary, 1e-12
        return (
            abs(self.eta.real) <= tol * abs(self.eta)
            and abs(complex(b.p).real) <= tol * max(1.0, abs(b.p))
            and abs(complex(b.q).real) <= tol * max(1.0, abs(b.q))
            and abs(complex(b.xi).imag) <= tol * max(1.0, abs(b.xi))
            and b.p != 0
            and b.q != 0
        )

    def with_thetas(self, thetas) -> "ChainSpec":
        return ChainSpec(self.n_sites, self.eta, tuple(thetas), self.boundary)

    def homogeneous_copy(self) -> "ChainSpec":
        return ChainSpec(self.n_sites, self.eta, None, self.boundary)


def _require_open(spec: ChainSpec) -> Open:
    if not spec.is_open:
        raise ModeError("operation requires an Open boundary")
    return spec.boundary


def _require_periodic(spec: ChainSpec) -> None:
    if spec.is_open:
        raise ModeError("operation requires a Periodic boundary")


# local matrices


def r_matrix(u, eta=1j) -> np.ndarray:
    return u * np.eye(4, dtype=complex) + eta * PERMUTATION


def fused_r_matrix(u, eta=1j) -> np.ndarray:
    """Spin-1 auxiliary (x) spin-1/2 quantum R-matrix in the symmetric basis."""
    m = np.zeros((6, 6), dtype=complex)
    m[0, 0] = m[5, 5] = u + eta
    m[1, 1] = m[4, 4] = u - eta
    m[2, 2] = m[3, 3] = u
    m[1, 2] = m[2, 1] = m[3, 4] = m[4, 3] = SQRT2 * eta
    return m


def k_matrices(u, spec: ChainSpec):
    """(K-, K+) at spectral parameter u."""
    b = _require_open(spec)
    eta = spec.eta
    km = np.diag([b.p + u, b.p - u]).astype(complex)
    kp = np.array(
        [[b.q + u + eta, b.xi * (u + eta)], [b.xi * (u + eta), b.q - u - eta]], dtype=complex
    )
    return km, kp


def fused_k_matrices(u, spec: ChainSpec):
    """(K(1)-, K(1)+): projected two-site K products over 2u, in the symmetric basis."""
    _require_open(spec)
    if u == 0:
        raise ZeroDivisionError("fused K normalisation 2u vanishes at u = 0")
    eta = spec.eta
    i2 = np.eye(2)
    km_u, kp_u = k_matrices(u, spec)
    km_s, kp_s = k_matrices(u - eta, spec)
    plus = np.kron(kp_s, i2) @ r_matrix(-2 * u - eta, eta) @ np.kron(i2, kp_u)
    minus = np.kron(i2, km_u) @ r_matrix(2 * u - eta, eta) @ np.kron(km_s, i2)
    s = SYM_ISOMETRY
    return s.T @ minus @ s / (2 * u), s.T @ plus @ s / (2 * u)


# chain contraction


def _l_tensor(m: np.ndarray, aux: int) -> np.ndarray:
    """aux (x) site matrix -> L[a', a, s', s]."""
    return m.reshape(aux, 2, aux, 2).transpose(0, 2, 1, 3)


def apply_chain(factors, n: int, aux: int, vecs: np.ndarray) -> np.ndarray:
    """Apply tr_aux(F_1 F_2 ... F_m) to the columns of ``vecs``.

    Each factor is ``("aux", M)`` for an aux-only matrix or ``("site", j, L)`` for
    an L-tensor acting on aux and site j.
    """
    batch = vecs.shape[1]
    y = np.zeros((aux, aux) + (2,) * n + (batch,), dtype=complex)
    block = vecs.reshape((2,) * n + (batch,))
    for a in range(aux):
        y[a, a] = block
    for f in reversed(factors):
        if f[0] == "aux":
            y = np.tensordot(f[1], y, axes=(1, 0))
        else:
            j, lt = f[1], f[2]
            y = np.tensordot(lt, y, axes=([1, 3], [0, 2 + j]))
            y = np.moveaxis(y, 1, 2 + j)
    return np.einsum("aa...->...", y).reshape(2**n, batch)


def _factors(kind: str, u, spec: ChainSpec):
    n, eta, th = spec.n_sites, spec.eta, spec.thetas
    if kind in ("t", "w"):
        _require_periodic(spec)
        rm, aux = (r_matrix, 2) if kind == "t" else (fused_r_matrix, 3)
        return aux, [("site", j, _l_tensor(rm(u - th[j], eta), aux)) for j in reversed(range(n))]
    if kind in ("to", "wo"):
        if kind == "to":
            km, kp = k_matrices(u, spec)
            rm, aux = r_matrix, 2
        else:
            km, kp = fused_k_matrices(u, spec)
            rm, aux = fused_r_matrix, 3
        left = [("site", j, _l_tensor(rm(u - th[j], eta), aux)) for j in reversed(range(n))]
        right = [("site", j, _l_tensor(rm(u + th[j], eta), aux)) for j in range(n)]
        return aux, [("aux", kp)] + left + [("aux", km)] + right
    raise ValueError(f"unknown operator kind {kind!r}")


def apply_operator(kind: str, u, spec: ChainSpec, vecs) -> np.ndarray:
    """Matrix-free action of t ("t"), W ("w"), t^o ("to") or W^o ("wo") on vectors.

    The open W operator at u = 0 is the average of u = +-1e-6 (removable 1/u).
    """
    vecs = np.asarray(vecs, dtype=complex)
    single = vecs.ndim == 1
    block = vecs[:, None] if single else vecs
    if block.shape[0] != 2**spec.n_sites:
        raise ValueError("vector length does not match the chain")
    if kind == "wo" and u == 0:
        out = 0.5 * (
            apply_operator(kind, FUSED_U0_EPS, spec, block)
            + apply_operator(kind, -FUSED_U0_EPS, spec, block)
        )
    else:
        aux, fs = _factors(kind, u, spec)
        out = apply_chain(fs, spec.n_sites, aux, block)
    return out[:, 0] if single else out


def _dense(kind: str, u, spec: ChainSpec) -> np.ndarray:
    dim = 2**spec.n_sites
    aux = 3 if kind in ("w", "wo") else 2
    check_dim(aux * dim)
    chunk = max(1, (1 << 22) // (aux * aux * dim))
    eye = np.eye(dim, dtype=complex)
    cols = [apply_operator(kind, u, spec, eye[:, s : s + chunk]) for s in range(0, dim, chunk)]
    return np.hstack(cols)


def transfer_periodic(u, spec: ChainSpec) -> np.ndarray:
    return _dense("t", u, spec)


def w_operator_periodic(u, spec: ChainSpec) -> np.ndarray:
    return _dense("w", u, spec)


def transfer_open(u, spec: ChainSpec) -> np.ndarray:
    return _dense("to", u, spec)


def w_operator_open(u, spec: ChainSpec) -> np.ndarray:
    return _dense("wo", u, spec)


# Hamiltonians


def pauli_string(ops: dict, n: int) -> np.ndarray:
    """Dense product of single-site Paulis, ``ops`` maps 0-based site -> 'x'|'y'|'z'."""
    check_dim(2**n)
    dim = 2**n
    idx = np.arange(dim)
    col = idx.copy()
    phase = np.ones(dim, dtype=complex)
    for j, c in ops.items():
        bit = (idx >> (n - 1 - j)) & 1
        if c == "z":
            phase *= 1 - 2 * bit
        elif c == "x":
            col ^= 1 << (n - 1 - j)
        elif c == "y":
            phase *= 1j * (1 - 2 * bit)
            col ^= 1 << (n - 1 - j)
        else:
            raise ValueError(f"unknown Pauli {c!r}")
    m = np.zeros((dim, dim), dtype=complex)
    m[col, idx] = phase
    return m


def _heisenberg_bond(i: int, j: int, n: int) -> np.ndarray:
    return sum(pauli_string({i: c, j: c}, n) for c in "xyz")


def hamiltonian(spec: ChainSpec) -> np.ndarray:
    """Pauli-form Hamiltonian (periodic ring or open chain with boundary fields)."""
    n = spec.n_sites
    if not spec.is_open:
        if n == 1:
            return 3 * np.eye(2, dtype=complex)
        return sum(_heisenberg_bond(j, (j + 1) % n, n) for j in range(n))
    b = spec.boundary
    h = np.zeros((2**n, 2**n), dtype=complex)
    for j in range(n - 1):
        h += _heisenberg_bond(j, j + 1, n)
    h += spec.eta / b.p * pauli_string({0: "z"}, n)
    h += spec.eta / b.q * (pauli_string({n - 1: "z"}, n) + b.xi * pauli_string({n - 1: "x"}, n))
    return h


def hamiltonian_from_transfer(spec: ChainSpec, step: float = 1e-5) -> np.ndarray:
    """Log-derivative of the homogeneous transfer matrix at u = 0 (cross-check of ``hamiltonian``).

    Periodic: 2 eta t'(0) t(0)^-1 - N; open: eta t'(0) t(0)^-1 - N.
    """
    hom = spec.homogeneous_copy()
    build, pref = (transfer_open, 1.0) if spec.is_open else (transfer_periodic, 2.0)
    t0 = build(0.0, hom)
    dt = (build(step, hom) - build(-step, hom)) / (2 * step)
    try:
        inv = np.linalg.inv(t0)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("t(0) is singular") from exc
    return pref * spec.eta * dt @ inv - spec.n_sites * np.eye(2**spec.n_sites)


# scalar functions


@dataclass(frozen=True)
class ScalarFns:
    """Scalar functions of u; open-only entries are None for a periodic spec."""

    a: Callable
    d: Callable
    phi: Callable
    rho2: Callable
    a_open: Callable | None = None
    d_open: Callable | None = None
    qdet_open: Callable | None = None
    qdet_hom: Callable | None = None
    qbar: complex | None = None


def scalar_fns(spec: ChainSpec) -> ScalarFns:
    eta = spec.eta
    th = np.array(spec.thetas, dtype=complex)
    n = spec.n_sites

    def a(u):
        return complex(np.prod(u - th + eta))

    def d(u):
        return a(u - eta)

    def phi(u):
        return eta**2 - u**2

    def rho2(u):
        return -u * (u + 2 * eta)

    if not spec.is_open:
        return ScalarFns(a=a, d=d, phi=phi, rho2=rho2)
    b = spec.boundary
    s = np.sqrt(1 + complex(b.xi) ** 2)

    def a_open(u):
        bulk = np.prod((u - th + eta) * (u + th + eta))
        return complex((u + eta) / (u + eta / 2) * (u + b.p) * (s * u + b.q) * bulk)

    def d_open(u):
        return a_open(-u - eta)

    def qdet_open(u):
        # a^o(u) d^o(u-eta) (u+eta/2)(u-eta/2) with the removable poles cancelled
        left = (u + eta) * (u + b.p) * (s * u + b.q) * np.prod((u - th + eta) * (u + th + eta))
        right = (u - eta) * (-u + b.p) * (-s * u + b.q) * np.prod((-u - th + eta) * (-u + th + eta))
        return complex(left * right)

    def qdet_hom(u):
        return complex(
            (u - eta) * (u + eta) * (u - b.p) * (u + b.p) * (s * u + b.q) * (s * u - b.q)
            * (u + eta) ** (2 * n) * (u - eta) ** (2 * n)
        )

    return ScalarFns(
        a=a, d=d, phi=phi, rho2=rho2, a_open=a_open, d_open=d_open,
        qdet_open=qdet_open, qdet_hom=qdet_hom, qbar=b.qbar,
    )
