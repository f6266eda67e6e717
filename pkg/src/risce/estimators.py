"""Cascaded-channel estimators and their error metric.

All estimators return an :class:`Estimate` carrying the recovered channel,
the conditioning actually faced by the linear solve, and a flag that is set
whenever a rank-deficient system was solved in minimum-norm fashion instead
of refusing to produce output.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import condition_number, solve_gram

DICTIONARY_OVERSAMPLE = 2


@dataclass(frozen=True)
class Estimate:
    h_hat: np.ndarray
    condition: float
    flagged: bool
    group_conditions: tuple = None


def nmse(h_hat, h):
    """Normalized squared error ||h_hat - h||^2 / ||h||^2."""
    ref = np.vdot(h, h).real
    if ref == 0.0:
        raise ValueError("reference channel is identically zero")
    err = h_hat - h
    return np.vdot(err, err).real / ref


def perturb_channel_estimate(F, rel_error, rng):
    """Mismatched copy of F with Frobenius-relative error rel_error.

    rel_error = 0 returns F itself without consuming randomness.
    """
    if rel_error < 0.0:
        raise ValueError("rel_error must be nonnegative")
    if rel_error == 0.0:
        return F
    E = rng.standard_normal(F.shape) + 1j * rng.standard_normal(F.shape)
    scale = rel_error * np.linalg.norm(F) / np.linalg.norm(E)
    return F + scale * E


def conv_2tce(F_hat, vectors, obs):
    """Stacked least squares over all slots of a random-phase schedule.

    Works on the Gram system sum_t diag(conj(psi_t)) F^H F diag(psi_t),
    assembled as a Hadamard product so the cost is O(T M^2) rather than
    forming the T N x M stacked matrix.  Rank-deficient systems (e.g. too
    few slots) are solved minimum-norm and flagged.
    """
    T, M = vectors.shape
    if F_hat.shape[1] != M or obs.shape != (F_hat.shape[0], T):
        raise ValueError("estimator input shapes disagree")
    K = F_hat.conj().T @ F_hat
    G = K * (vectors.conj().T @ vectors)
    rhs = np.einsum("tm,mt->m", vectors.conj(), F_hat.conj().T @ obs)
    h_hat, flagged = solve_gram(G, rhs)
    return Estimate(h_hat, condition_number(G), flagged)


def piecewise_ls(F_hat, schedule, decoupled):
    """Per-group least squares on decoupled subframe observations.

    Each group solves its own B-block normal equations with the group Gram
    (V V^T) o K_q; the full channel is reassembled on the group's sorted
    member indices.  The reported condition number is the worst across
    groups and the flag is the OR of the per-group flags.
    """
    part = schedule.partition
    codes = schedule.subframe_codes
    B = schedule.b_subframes
    M = part.n_elements
    if F_hat.shape[1] != M:
        raise ValueError("F_hat column count does not match the partition")
    h_hat = np.zeros(M, dtype=complex)
    conds = []
    flagged = False
    vv = codes.astype(float) @ codes.T.astype(float)
    for q, members in enumerate(part.groups):
        idx = list(members)
        Fq = F_hat[:, idx]
        G = vv * (Fq.conj().T @ Fq)
        proj = Fq.conj().T @ decoupled[:, :, q].T  # (M', B)
        rhs = np.einsum("mb,mb->m", codes.astype(complex), proj)
        x, bad = solve_gram(G, rhs)
        h_hat[idx] = x
        conds.append(condition_number(G))
        flagged = flagged or bad
    return Estimate(h_hat, max(conds), flagged, tuple(conds))


@lru_cache(maxsize=8)
def _panel_grid(rows, cols, spacing_wl, oversample):
    n_wide = oversample * max(rows, cols)
    n_narrow = min(rows, cols)
    wide = np.linspace(-1.0, 1.0, n_wide, endpoint=False)
    narrow = np.linspace(-1.0, 1.0, n_narrow, endpoint=False)
    fy, fz = (wide, narrow) if cols >= rows else (narrow, wide)
    r_idx = np.arange(rows) - (rows - 1) / 2.0
    c_idx = np.arange(cols) - (cols - 1) / 2.0
    ay = np.exp(-2j * np.pi * spacing_wl * np.outer(c_idx, fy))  # (cols, ny)
    az = np.exp(-2j * np.pi * spacing_wl * np.outer(r_idx, fz))  # (rows, nz)
    # element order is row-major over (row, col), matching the panel layout
    D = np.einsum("rz,cy->rcyz", az, ay).reshape(rows * cols, -1)
    return D / np.sqrt(rows * cols)


def panel_dictionary(ris_array, oversample=DICTIONARY_OVERSAMPLE):
    """Far-field steering atoms on a separable direction-cosine grid.

    Only the longer panel axis is oversampled, so the atom count is
    oversample * rows * cols.  Atoms are unit-norm columns.
    """
    if oversample < 1:
        raise ValueError("oversample must be at least 1")
    return _panel_grid(ris_array.rows, ris_array.cols,
                       ris_array.spacing_wl, oversample)


def omp_estimate(F_hat, vectors, obs, dictionary, sparsity):
    """Orthogonal matching pursuit against an explicit dictionary.

    Shares the random-phase observation with conv_2tce and greedily picks
    `sparsity` atoms; the channel estimate is the selected atoms weighted
    by their joint least-squares gains.
    """
    T, M = vectors.shape
    N = F_hat.shape[0]
    D = dictionary
    if sparsity < 1:
        raise ValueError("sparsity must be at least 1")
    if sparsity > N * T:
        raise ValueError("sparsity exceeds the measurement count")
    if D.shape[0] != M:
        raise ValueError("dictionary size does not match the panel")
    # sensing matrix per atom: stack_t F_hat diag(psi_t) d
    y = obs.T.reshape(N * T)
    B_mat = (F_hat[None, :, :] * vectors[:, None, :]).reshape(N * T, M) @ D
    support = []
    resid = y.copy()
    coef = np.zeros(0, dtype=complex)
    sparsity = min(sparsity, D.shape[1])
    for _ in range(sparsity):
        scores = np.abs(B_mat.conj().T @ resid)
        scores[support] = -1.0
        support.append(int(np.argmax(scores)))
        sub = B_mat[:, support]
        coef, *_ = np.linalg.lstsq(sub, y, rcond=None)
        resid = y - sub @ coef
    sub = B_mat[:, support]
    gram = sub.conj().T @ sub
    h_hat = D[:, support] @ coef
    cond = condition_number(gram)
    return Estimate(h_hat, cond, not np.isfinite(cond))
