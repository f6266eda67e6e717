"""Conditioning-aware grouping of surface elements.

Elements whose sensing columns correlate strongly must not share a group:
within a group the piecewise estimator inverts a code-masked Gram matrix,
and coherent columns push it toward singularity. The greedy pass seeds
groups by splitting the worst column pairs apart, then grows them in
most-constrained-first order, each element joining the group it correlates
with least on average.

The assignment loop is the per-channel hot path. A compiled kernel is used
when the extension built; set RISCE_PURE_PYTHON=1 to force the reference
implementation. Both produce identical partitions.
"""

import itertools
import os

import numpy as np

from .numerics import condition_number, hadamard_matrix
from .phase import Partition

if os.environ.get("RISCE_PURE_PYTHON"):
    from ._greedy_ref import greedy_assign_kernel

    GREEDY_BACKEND = "python"
else:
    try:
        from ._greedy_cy import greedy_assign_kernel

        GREEDY_BACKEND = "compiled"
    except ImportError:
        from ._greedy_ref import greedy_assign_kernel

        GREEDY_BACKEND = "python"


def correlation_weights(F_hat):
    """Normalized pairwise column coherence of the sensing matrix.

    w[i, j] = |f_i^H f_j| / (|f_i| |f_j|), diagonal zeroed. Columns of
    zero norm have no defined direction and are rejected.
    """
    G = F_hat.conj().T @ F_hat
    norms = np.sqrt(np.real(np.diag(G)))
    bad = np.where(norms == 0.0)[0]
    if bad.size:
        raise ValueError(f"zero column in channel estimate at index {bad[0]}")
    W = np.abs(G) / np.outer(norms, norms)
    # gemm fills both triangles independently; force exact symmetry
    W = 0.5 * (W + W.T)
    np.fill_diagonal(W, 0.0)
    return W


def seed_init(weights, Q):
    """Q singleton seeds from the Q/2 heaviest disjoint column pairs.

    Pairs are scanned in descending weight (ties: lowest indices first)
    and kept when both endpoints are still free; each kept pair seeds two
    different groups, so the strongest correlations start separated.
    """
    if Q < 2 or Q % 2:
        raise ValueError(f"seeding requires even Q >= 2, got {Q}")
    M = weights.shape[0]
    if M < Q:
        raise ValueError(f"need at least Q={Q} elements, got {M}")
    iu, ju = np.triu_indices(M, 1)
    order = np.lexsort((ju, iu, -weights[iu, ju]))
    used = np.zeros(M, dtype=bool)
    seeds = []
    for idx in order:
        i, j = int(iu[idx]), int(ju[idx])
        if not (used[i] or used[j]):
            used[i] = used[j] = True
            seeds += [i, j]
            if len(seeds) == Q:
                return seeds
    raise ValueError("not enough disjoint pairs to seed every group")


def greedy_assign(weights, seeds, Q, group_size):
    """Grow the seeded groups to a full partition.

    Unassigned elements are processed in descending order of their
    strongest correlation to anything already placed; each joins the
    not-yet-full group minimizing the mean correlation to its current
    members (ties: lowest group index).
    """
    M = weights.shape[0]
    if Q == 1:
        return Partition.from_groups([range(M)], M)
    if M != Q * group_size:
        raise ValueError("group_size inconsistent with weights shape")
    W = np.ascontiguousarray(weights, dtype=np.float64)
    group_of = greedy_assign_kernel(W, list(seeds), Q, group_size)
    groups = [np.where(group_of == q)[0] for q in range(Q)]
    return Partition.from_groups(groups, M)


def greedy_partition(weights, Q, group_size):
    """Seed and grow in one call; Q=1 degenerates to the single full group."""
    if Q == 1:
        return Partition.from_groups([range(weights.shape[0])], weights.shape[0])
    return greedy_assign(weights, seed_init(weights, Q), Q, group_size)


def contiguous_partition(M, Q):
    """Index-order blocks, the no-grouping baseline."""
    if M % Q:
        raise ValueError(f"Q={Q} does not divide M={M}")
    Mp = M // Q
    return Partition.from_groups(
        [range(q * Mp, (q + 1) * Mp) for q in range(Q)], M)


def surrogate_objective(weights, partition):
    """Worst-group sum of intra-group pair weights (the grouping objective)."""
    worst = 0.0
    for g in partition.groups:
        idx = np.fromiter(g, dtype=np.int64)
        sub = weights[np.ix_(idx, idx)]
        worst = max(worst, float(np.sum(np.triu(sub, 1))))
    return worst


def group_grams(F_hat, partition, B):
    """Code-masked Gram matrix of every group under B subframes."""
    Mp = partition.group_size
    codes = hadamard_matrix(Mp)[:, :B]
    mask = codes @ codes.T
    out = []
    for g in partition.groups:
        Fq = F_hat[:, list(g)]
        out.append(mask * (Fq.conj().T @ Fq))
    return out


def worst_condition(F_hat, partition, B):
    """Largest group-Gram condition number; +inf when any group is singular."""
    return max(condition_number(G) for G in group_grams(F_hat, partition, B))


def _equal_partitions(items, size):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for combo in itertools.combinations(rest, size - 1):
        group = (first,) + combo
        remaining = [x for x in rest if x not in combo]
        for tail in _equal_partitions(remaining, size):
            yield [group] + tail


def brute_force_partition(weights, Q):
    """Exhaustive minimizer of the grouping objective (test oracle).

    Feasible only for tiny M; enumeration anchors each group at its
    lowest remaining index so no partition appears twice.
    """
    M = weights.shape[0]
    if M > 12:
        raise ValueError(f"exhaustive search capped at 12 elements, got {M}")
    if M % Q:
        raise ValueError(f"Q={Q} does not divide M={M}")
    best, best_val = None, np.inf
    for groups in _equal_partitions(list(range(M)), M // Q):
        part = Partition.from_groups(groups, M)
        val = surrogate_objective(weights, part)
        if val < best_val:
            best, best_val = part, val
    return best, best_val
