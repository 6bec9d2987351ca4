"""Dense complex linear algebra substrate.

Operators are plain 2-D numpy arrays; the helpers here add the dimension cap,
site embeddings, auxiliary partial traces and a checked Hermitian eigensolver.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from twlab.errors import ContractError, SizeError

DEFAULT_MAX_DIM = 3 * 2**14
HERMITICITY_TOL = 1e-12


def max_dim() -> int:
    """Dimension cap for dense operators; ``TWLAB_MAX_DIM`` overrides it."""
    raw = os.environ.get("TWLAB_MAX_DIM")
    return int(raw) if raw else DEFAULT_MAX_DIM


def check_dim(dim: int) -> None:
    if dim > max_dim():
        raise SizeError(f"dimension {dim} exceeds the dense cap {max_dim()}")


@dataclass(frozen=True)
class FactorSpace:
    """Auxiliary factor (leftmost) times quantum factor."""

    aux_dim: int
    quantum_dim: int

    def __post_init__(self):
        if self.aux_dim not in (1, 2, 3):
            raise ValueError(f"aux_dim must be 1, 2 or 3, got {self.aux_dim}")
        q = self.quantum_dim
        if q < 1 or q & (q - 1):
            raise ValueError(f"quantum_dim must be a power of two, got {q}")

    @property
    def dim(self) -> int:
        return self.aux_dim * self.quantum_dim


def _square(op, name="op") -> np.ndarray:
    a = np.asarray(op)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def kron(a, b) -> np.ndarray:
    a, b = _square(a, "a"), _square(b, "b")
    check_dim(a.shape[0] * b.shape[0])
    return np.kron(a, b)


def embed(op, sites, n: int) -> np.ndarray:
    """Act with a k-site operator on the listed (1-based) sites of an n-site chain.

    ``sites[i]`` is the chain site carrying the i-th tensor factor of ``op``.
    """
    op = _square(op)
    sites = [int(s) for s in sites]
    k = len(sites)
    if len(set(sites)) != k or any(s < 1 or s > n for s in sites):
        raise ValueError(f"sites {sites} must be distinct and within 1..{n}")
    if op.shape[0] != 2**k:
        raise ValueError(f"operator dim {op.shape[0]} does not match {k} sites")
    check_dim(2**n)
    rest = [s for s in range(1, n + 1) if s not in sites]
    full = np.kron(op, np.eye(2 ** (n - k))).reshape((2,) * (2 * n))
    # current slot order is sites + rest; move each to its chain position
    order = [s - 1 for s in sites + rest]
    perm = np.argsort(order)
    full = full.transpose(list(perm) + [n + p for p in perm])
    return full.reshape(2**n, 2**n)


def partial_trace_aux(op, space: FactorSpace) -> np.ndarray:
    op = _square(op)
    if op.shape[0] != space.dim:
        raise ValueError(f"operator dim {op.shape[0]} != {space.aux_dim}*{space.quantum_dim}")
    a, q = space.aux_dim, space.quantum_dim
    return np.einsum("aiaj->ij", op.reshape(a, q, a, q))


def hermiticity_defect(op) -> float:
    """max |A - A^dagger| relative to max |A|."""
    op = _square(op)
    scale = np.abs(op).max()
    if scale == 0:
        return 0.0
    return float(np.abs(op - op.conj().T).max() / scale)


def hermitian_eigs(op, select: tuple[int, int] | None = None):
    """Ascending eigenvalues and orthonormal eigenvectors of a Hermitian matrix.

    ``select=(lo, hi)`` restricts to that inclusive index range.
    """
    op = _square(op)
    defect = hermiticity_defect(op)
    if defect > HERMITICITY_TOL:
        raise ContractError(f"matrix is not Hermitian (defect {defect:.3e})")
    # symmetrize to strip rounding; real matrices take the faster real path
    sym = 0.5 * (op + op.conj().T)
    if not np.iscomplexobj(sym) or not np.any(sym.imag):
        sym = np.ascontiguousarray(sym.real)
    subset = None if select is None else [int(select[0]), int(select[1])]
    w, v = scipy.linalg.eigh(sym, subset_by_index=subset)
    return w, v


def apply(op, vec) -> np.ndarray:
    op = _square(op)
    vec = np.asarray(vec)
    if vec.shape[0] != op.shape[0]:
        raise ValueError(f"vector length {vec.shape[0]} != operator dim {op.shape[0]}")
    return op @ vec
