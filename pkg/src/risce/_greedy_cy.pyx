# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy assignment kernel. Mirrors _greedy_ref exactly: same
candidate order, same first-wins tie-breaks, same arithmetic sequence."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def greedy_assign_kernel(cnp.float64_t[:, ::1] W, seeds, Py_ssize_t Q,
                         Py_ssize_t group_cap):
    cdef Py_ssize_t M = W.shape[0]
    group_of_arr = np.full(M, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] group_of = group_of_arr
    cdef cnp.int64_t[::1] sizes = np.zeros(Q, dtype=np.int64)
    cdef cnp.float64_t[:, ::1] member_sum = np.zeros((M, Q))
    cdef cnp.float64_t[::1] max_to_assigned = np.full(M, -1.0)
    cdef Py_ssize_t n_seeds = len(seeds)
    cdef Py_ssize_t i, q, s, step, c, best_q
    cdef double best, score, w

    for q in range(n_seeds):
        s = seeds[q]
        group_of[s] = q
        sizes[q] = 1
    for q in range(n_seeds):
        s = seeds[q]
        for i in range(M):
            member_sum[i, group_of[s]] += W[i, s]
            if W[i, s] > max_to_assigned[i]:
                max_to_assigned[i] = W[i, s]

    for step in range(M - n_seeds):
        c = -1
        best = -2.0
        for i in range(M):
            if group_of[i] < 0 and max_to_assigned[i] > best:
                best = max_to_assigned[i]
                c = i
        best_q = -1
        best = 0.0
        for q in range(Q):
            if sizes[q] >= group_cap:
                continue
            score = member_sum[c, q] / sizes[q]
            if best_q < 0 or score < best:
                best = score
                best_q = q
        group_of[c] = best_q
        sizes[best_q] += 1
        for i in range(M):
            if group_of[i] < 0:
                w = W[i, c]
                member_sum[i, best_q] += w
                if w > max_to_assigned[i]:
                    max_to_assigned[i] = w
    return group_of_arr
