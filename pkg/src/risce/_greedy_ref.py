"""Pure Python greedy assignment kernel (reference implementation).

The compiled extension mirrors this loop exactly; both must keep the same
iteration order and first-wins tie-breaks so partitions agree bit for bit.
"""

import numpy as np


def greedy_assign_kernel(W, seeds, Q, group_cap):
    M = W.shape[0]
    group_of = np.full(M, -1, dtype=np.int64)
    sizes = np.zeros(Q, dtype=np.int64)
    member_sum = np.zeros((M, Q))
    max_to_assigned = np.full(M, -1.0)
    for q, s in enumerate(seeds):
        group_of[s] = q
        sizes[q] = 1
    for s in seeds:
        member_sum[:, group_of[s]] += W[:, s]
        np.maximum(max_to_assigned, W[:, s], out=max_to_assigned)
    for _ in range(M - len(seeds)):
        pending = np.where(group_of < 0)[0]
        c = pending[np.argmax(max_to_assigned[pending])]
        scores = member_sum[c] / sizes
        scores[sizes >= group_cap] = np.inf
        q = int(np.argmin(scores))
        group_of[c] = q
        sizes[q] += 1
        open_rows = group_of < 0
        member_sum[open_rows, q] += W[open_rows, c]
        max_to_assigned[open_rows] = np.maximum(max_to_assigned[open_rows],
                                                W[open_rows, c])
    return group_of
