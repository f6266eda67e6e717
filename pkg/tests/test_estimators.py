import numpy as np
import pytest

from risce.channel import (
    ChannelRealization,
    Geometry,
    LinearArraySpec,
    PlanarArraySpec,
    ScattererSet,
    draw_channel,
)
from risce.estimators import (
    conv_2tce,
    nmse,
    omp_estimate,
    panel_dictionary,
    perturb_channel_estimate,
    piecewise_ls,
)
from risce.phase import (
    Partition,
    build_schedule,
    decouple,
    random_phase_vectors,
    received_pilots,
    simulate_pilot_rx,
)


def fake_realization(F, h):
    empty = ScattererSet(np.zeros((1, 3)), np.zeros(1, dtype=complex))
    return ChannelRealization(F, h, np.zeros(3), empty, empty)


def contiguous(M, Q):
    Mp = M // Q
    return Partition.from_groups(
        [tuple(range(q * Mp, (q + 1) * Mp)) for q in range(Q)], M)


def random_instance(rng, N, M):
    F = rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M))
    h = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    return F, h


def stacked_sensing(F, vectors):
    # explicit tall matrix the Gram shortcut is supposed to reproduce
    return np.vstack([F * psi[None, :] for psi in vectors])


# --- nmse ---

def test_nmse_values():
    h = np.array([1.0 + 1j, -2.0, 0.5j])
    assert nmse(h, h) == 0.0
    assert nmse(np.zeros(3), h) == pytest.approx(1.0)
    assert nmse(2 * h, h) == pytest.approx(1.0)


def test_nmse_rejects_zero_reference():
    with pytest.raises(ValueError):
        nmse(np.ones(3), np.zeros(3))


# --- perturbed channel knowledge ---

def test_perturb_hits_requested_relative_error():
    rng = np.random.default_rng(0)
    F = rng.standard_normal((8, 16)) + 1j * rng.standard_normal((8, 16))
    for e in (0.01, 0.1, 0.5):
        Fe = perturb_channel_estimate(F, e, np.random.default_rng(1))
        rel = np.linalg.norm(Fe - F) / np.linalg.norm(F)
        assert rel == pytest.approx(e, rel=1e-12)


def test_perturb_zero_error_is_identity():
    rng = np.random.default_rng(2)
    F = rng.standard_normal((4, 4)) + 0j
    state = rng.bit_generator.state
    assert perturb_channel_estimate(F, 0.0, rng) is F
    assert rng.bit_generator.state == state  # no randomness consumed
    with pytest.raises(ValueError):
        perturb_channel_estimate(F, -0.1, rng)


# --- conv_2tce ---

def test_conv_single_slot_unitary_front_end_is_exact():
    # with F unitary one slot already determines h
    rng = np.random.default_rng(3)
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    F, _ = np.linalg.qr(A)
    h = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    psi = random_phase_vectors(6, 1, rng)
    Y = received_pilots(fake_realization(F, h), psi, 1.0, 0.0, rng)
    est = conv_2tce(F, psi, Y)
    assert nmse(est.h_hat, h) < 1e-24
    assert not est.flagged


def test_conv_zero_observation_gives_zero_estimate():
    rng = np.random.default_rng(4)
    F, _ = random_instance(rng, 4, 8)
    psi = random_phase_vectors(8, 2, rng)
    est = conv_2tce(F, psi, np.zeros((4, 2), dtype=complex))
    assert np.all(est.h_hat == 0.0)


def test_conv_matches_stacked_pseudoinverse():
    rng = np.random.default_rng(5)
    N, M, T = 4, 8, 2
    F, h = random_instance(rng, N, M)
    psi = random_phase_vectors(M, T, rng)
    Y = received_pilots(fake_realization(F, h), psi, 1.0, 0.05, rng)
    A = stacked_sensing(F, psi)
    oracle = np.linalg.pinv(A) @ Y.T.reshape(N * T)
    est = conv_2tce(F, psi, Y)
    assert np.linalg.norm(est.h_hat - oracle) < 1e-8 * np.linalg.norm(oracle)
    assert est.condition == pytest.approx(np.linalg.cond(A.conj().T @ A),
                                          rel=1e-6)


def test_conv_underdetermined_is_flagged_min_norm():
    rng = np.random.default_rng(6)
    N, M, T = 4, 8, 1  # N*T < M
    F, h = random_instance(rng, N, M)
    psi = random_phase_vectors(M, T, rng)
    Y = received_pilots(fake_realization(F, h), psi, 1.0, 0.0, rng)
    est = conv_2tce(F, psi, Y)
    assert est.flagged
    oracle = np.linalg.pinv(stacked_sensing(F, psi)) @ Y.T.reshape(N * T)
    assert np.linalg.norm(est.h_hat - oracle) < 1e-8 * np.linalg.norm(oracle)


def test_conv_rejects_mismatched_shapes():
    rng = np.random.default_rng(7)
    F, _ = random_instance(rng, 4, 8)
    psi = random_phase_vectors(8, 3, rng)
    with pytest.raises(ValueError):
        conv_2tce(F, psi, np.zeros((4, 2), dtype=complex))
    with pytest.raises(ValueError):
        conv_2tce(F, np.ones((3, 7)), np.zeros((4, 3), dtype=complex))


# --- piecewise_ls ---

def test_piecewise_noiseless_is_exact():
    g = Geometry(bs_array=LinearArraySpec(16),
                 ris_array=PlanarArraySpec(4, 8))
    rng = np.random.default_rng(8)
    ch = draw_channel(g, 4, 4, rng)
    part = contiguous(32, 4)
    sched = build_schedule(32, 4, 8, part)
    obs = simulate_pilot_rx(ch, sched, 1.0, 0.0, rng)
    est = piecewise_ls(ch.ris_bs, sched, decouple(obs, sched))
    assert nmse(est.h_hat, ch.user_ris) < 1e-10
    assert not est.flagged


def test_piecewise_matches_per_group_stacked_solve():
    # noisy case against the explicit B-block least squares per group
    rng = np.random.default_rng(9)
    N, M, Q, B = 8, 16, 4, 4
    F, h = random_instance(rng, N, M)
    part = Partition.from_groups(
        [(0, 5, 10, 15), (1, 4, 11, 14), (2, 7, 8, 13), (3, 6, 9, 12)], M)
    sched = build_schedule(M, Q, B, part)
    obs = simulate_pilot_rx(fake_realization(F, h), sched, 1.0, 0.1, rng)
    dec = decouple(obs, sched)
    est = piecewise_ls(F, sched, dec)
    codes = sched.subframe_codes
    for q, members in enumerate(part.groups):
        idx = list(members)
        A = np.vstack([F[:, idx] * codes[:, b][None, :] for b in range(B)])
        y = np.concatenate([dec[b, :, q] for b in range(B)])
        x, *_ = np.linalg.lstsq(A, y, rcond=None)
        assert np.linalg.norm(est.h_hat[idx] - x) < 1e-9 * np.linalg.norm(x)
    assert est.group_conditions is not None
    assert len(est.group_conditions) == Q
    assert est.condition == max(est.group_conditions)


def test_piecewise_single_group_equals_conv_on_same_slots():
    # Q=1 runs the whole panel through one Hadamard frame; solving it
    # piecewise or as one stacked system is the same least squares problem
    rng = np.random.default_rng(10)
    N, M = 8, 8
    F, h = random_instance(rng, N, M)
    sched = build_schedule(M, 1, M, contiguous(M, 1))
    Y = received_pilots(fake_realization(F, h), sched.vectors, 1.0, 0.2, rng)
    obs_blocked = Y.reshape(N, M, 1).transpose(1, 0, 2)
    from risce.phase import PilotObservation
    est_pw = piecewise_ls(F, sched, decouple(PilotObservation(obs_blocked),
                                             sched))
    est_conv = conv_2tce(F, sched.vectors, Y)
    rel = np.linalg.norm(est_pw.h_hat - est_conv.h_hat)
    assert rel < 1e-9 * np.linalg.norm(est_conv.h_hat)


def test_piecewise_noiseless_estimate_is_partition_invariant():
    rng = np.random.default_rng(11)
    N, M, Q, B = 8, 8, 2, 4
    F, h = random_instance(rng, N, M)
    ch = fake_realization(F, h)
    answers = []
    for groups in ([(0, 1, 2, 3), (4, 5, 6, 7)],
                   [(0, 2, 4, 6), (1, 3, 5, 7)],
                   [(0, 7, 1, 6), (2, 5, 3, 4)]):
        part = Partition.from_groups(groups, M)
        sched = build_schedule(M, Q, B, part)
        obs = simulate_pilot_rx(ch, sched, 1.0, 0.0, rng)
        est = piecewise_ls(F, sched, decouple(obs, sched))
        assert not est.flagged
        answers.append(est.h_hat)
    for a in answers[1:]:
        assert np.linalg.norm(a - answers[0]) < 1e-9 * np.linalg.norm(h)


def test_piecewise_rejects_wrong_width():
    rng = np.random.default_rng(12)
    sched = build_schedule(8, 2, 4, contiguous(8, 2))
    with pytest.raises(ValueError):
        piecewise_ls(np.ones((4, 6), dtype=complex), sched,
                     np.zeros((4, 4, 2), dtype=complex))


# --- dictionary + OMP ---

def test_panel_dictionary_shape_and_norms():
    D = panel_dictionary(PlanarArraySpec(4, 8))
    assert D.shape == (32, 64)  # oversample doubles the longer axis only
    assert np.allclose(np.linalg.norm(D, axis=0), 1.0)
    with pytest.raises(ValueError):
        panel_dictionary(PlanarArraySpec(4, 8), oversample=0)


def test_omp_recovers_single_atom():
    rng = np.random.default_rng(13)
    spec = PlanarArraySpec(4, 4)
    D = panel_dictionary(spec)
    F, _ = random_instance(rng, 8, 16)
    h = (1.3 - 0.4j) * D[:, 11]
    psi = random_phase_vectors(16, 4, rng)
    Y = received_pilots(fake_realization(F, h), psi, 1.0, 0.0, rng)
    est = omp_estimate(F, psi, Y, D, 1)
    assert nmse(est.h_hat, h) < 1e-10


def test_omp_recovers_two_orthogonal_atoms():
    rng = np.random.default_rng(14)
    spec = PlanarArraySpec(4, 4)
    D = panel_dictionary(spec)
    gram = np.abs(D.conj().T @ D)
    # pick a genuinely orthogonal pair so support recovery is clear cut
    i, j = np.argwhere(gram < 1e-10)[0]
    h = 2.0 * D[:, i] + (0.5 + 1.5j) * D[:, j]
    F, _ = random_instance(rng, 8, 16)
    psi = random_phase_vectors(16, 6, rng)
    Y = received_pilots(fake_realization(F, h), psi, 1.0, 0.0, rng)
    est = omp_estimate(F, psi, Y, D, 2)
    assert nmse(est.h_hat, h) < 1e-10


def test_omp_validates_inputs():
    rng = np.random.default_rng(15)
    D = panel_dictionary(PlanarArraySpec(4, 4))
    F, _ = random_instance(rng, 4, 16)
    psi = random_phase_vectors(16, 2, rng)
    Y = np.zeros((4, 2), dtype=complex)
    with pytest.raises(ValueError):
        omp_estimate(F, psi, Y, D, 0)
    with pytest.raises(ValueError):
        omp_estimate(F, psi, Y, D, 9)  # more atoms than measurements
    with pytest.raises(ValueError):
        omp_estimate(F, psi, Y, D[:12], 2)
