"""Shared dense linear-algebra helpers: Hadamard codes, guarded solves,
condition numbers."""

import numpy as np
import scipy.linalg

# Relative singular-value floor below which a Gram matrix is treated as singular.
SINGULAR_RTOL = 1e-12


def hadamard_matrix(n):
    """Sylvester Hadamard matrix of order n (n a power of two), entries +-1."""
    if n < 1 or n & (n - 1):
        raise ValueError(f"Hadamard order must be a power of two, got {n}")
    return scipy.linalg.hadamard(n).astype(np.float64)


def unitary_hadamard(n):
    """Hadamard matrix scaled to unitarity: Phi Phi^H = I."""
    return hadamard_matrix(n) / np.sqrt(n)


def condition_number(G):
    """Two-norm condition number of a square matrix; +inf when singular
    relative to SINGULAR_RTOL."""
    sv = scipy.linalg.svdvals(G)
    if sv[-1] <= SINGULAR_RTOL * sv[0]:
        return np.inf
    return float(sv[0] / sv[-1])


def solve_gram(G, rhs):
    """Solve G x = rhs for Hermitian positive semidefinite G.

    Returns (x, flagged). The fast path is a Cholesky solve; on numerical
    rank deficiency the solver falls back to a minimum-norm least-squares
    solution and flags the result instead of raising.
    """
    try:
        c, low = scipy.linalg.cho_factor(G, check_finite=False)
        x = scipy.linalg.cho_solve((c, low), rhs, check_finite=False)
        return x, False
    except (scipy.linalg.LinAlgError, ValueError):
        x, *_ = scipy.linalg.lstsq(G, rhs, check_finite=False)
        return x, True
