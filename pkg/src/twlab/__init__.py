"""Numerical laboratory for the t-W scheme of the spin-1/2 XXX chain.

Operators (R, K, fused R/K, transfer matrices, the fused W operator and the
Hamiltonians) are built densely for desk-scale chains; ground-state eigenvalue
polynomials are extracted by exact diagonalization, their zero roots are
classified into strings, the homogeneous root equations are solved by Newton
iteration and everything is compared to thermodynamic-limit closed forms.
"""

from twlab.chainops import ChainSpec, Open, Periodic

__all__ = ["ChainSpec", "Open", "Periodic"]
__version__ = "0.1.0"
