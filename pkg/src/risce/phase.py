"""Reflection-pattern schedules and pilot-domain processing.

The piecewise design runs B subframes of Q slots. Within a subframe every
group holds one Hadamard code column while the groups themselves are
multiplexed by a second, unitary Hadamard across the Q slots; unwinding
that outer code turns the M-dimensional sensing problem into Q independent
group-local ones at a 1/Q noise discount.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import hadamard_matrix, unitary_hadamard


def _is_pow2(n):
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class Partition:
    """Disjoint equal-size cover of the surface element indices."""

    groups: tuple

    @classmethod
    def from_groups(cls, groups, n_elements):
        tidy = tuple(tuple(sorted(int(i) for i in g)) for g in groups)
        flat = [i for g in tidy for i in g]
        if sorted(flat) != list(range(n_elements)):
            raise ValueError("groups must cover every element index exactly once")
        sizes = {len(g) for g in tidy}
        if len(sizes) != 1:
            raise ValueError(f"groups must share one size, got {sorted(sizes)}")
        return cls(tidy)

    @property
    def n_groups(self):
        return len(self.groups)

    @property
    def group_size(self):
        return len(self.groups[0])

    @property
    def n_elements(self):
        return self.n_groups * self.group_size


@dataclass(frozen=True)
class PhaseSchedule:
    q_groups: int
    b_subframes: int
    partition: Partition
    vectors: np.ndarray  # (T, M), entries +-1
    decoupler: np.ndarray  # (Q, Q) unitary
    subframe_codes: np.ndarray  # (M', B) Hadamard columns

    @property
    def n_slots(self):
        return self.q_groups * self.b_subframes


def build_schedule(M, Q, B, partition):
    """Piecewise reflection schedule of T = Q*B constant-modulus vectors.

    Slot k of subframe b sets group q to (outer Hadamard)[k, q] times
    (inner Hadamard column b), entrywise over the group's sorted indices.
    """
    if not (_is_pow2(Q) and _is_pow2(M // Q) and M % Q == 0):
        raise ValueError(f"Q and M/Q must be powers of two, got M={M}, Q={Q}")
    Mp = M // Q
    if not 1 <= B <= Mp:
        raise ValueError(f"need 1 <= B <= {Mp}, got B={B}")
    if partition.n_groups != Q or partition.n_elements != M:
        raise ValueError("partition shape does not match (M, Q)")
    outer = hadamard_matrix(Q)
    inner = hadamard_matrix(Mp)
    vectors = np.empty((Q * B, M))
    for b in range(B):
        for k in range(Q):
            psi = vectors[k + b * Q]
            for q, members in enumerate(partition.groups):
                psi[list(members)] = outer[k, q] * inner[:, b]
    return PhaseSchedule(Q, B, partition, vectors,
                         unitary_hadamard(Q), inner[:, :B].copy())


@dataclass(frozen=True)
class PilotObservation:
    """Normalized received pilots, one N x Q matrix per subframe."""

    subframes: np.ndarray  # (B, N, Q)


def random_phase_vectors(M, T, rng):
    """T reflection vectors with i.i.d. uniform phases (ungrouped training)."""
    return np.exp(2j * np.pi * rng.uniform(size=(T, M)))


def received_pilots(channel, vectors, power, noise_var, rng):
    """Raw normalized pilot matrix, one column per slot.

    y_t = sqrt(P) F diag(psi_t) h + n_t with n_t complex Gaussian of
    variance noise_var per entry; columns returned divided by sqrt(P)
    under unit training symbols.
    """
    if power <= 0.0:
        raise ValueError("power must be positive")
    if noise_var < 0.0:
        raise ValueError("noise_var must be nonnegative")
    F, h = channel.ris_bs, channel.user_ris
    N, M = F.shape
    if vectors.shape[1] != M or h.shape[0] != M:
        raise ValueError("schedule/channel dimension mismatch")
    Y = F @ (vectors * h[None, :]).T  # (N, T), noiseless and unit power
    if noise_var > 0.0:
        scale = np.sqrt(noise_var / (2.0 * power))
        Y = Y + scale * (rng.standard_normal(Y.shape)
                         + 1j * rng.standard_normal(Y.shape))
    return Y


def simulate_pilot_rx(channel, schedule, power, noise_var, rng):
    """Received pilots under the piecewise schedule, blocked by subframe."""
    Y = received_pilots(channel, schedule.vectors, power, noise_var, rng)
    N = Y.shape[0]
    B, Q = schedule.b_subframes, schedule.q_groups
    return PilotObservation(
        Y.reshape(N, B, Q).transpose(1, 0, 2).copy())


def decouple(obs, schedule):
    """Per-group observations z[b][:, q], noise variance noise_var/(P*Q).

    Multiplying each subframe by the adjoint unitary Hadamard cancels the
    cross-group mixing exactly; the extra 1/sqrt(Q) removes the sqrt(Q)
    amplitude the schedule gives each group.
    """
    Phi = schedule.decoupler
    Q = schedule.q_groups
    return obs.subframes @ Phi.conj().T / np.sqrt(Q)
