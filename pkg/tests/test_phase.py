import numpy as np
import pytest

from risce.channel import ChannelRealization, ScattererSet
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


# --- Partition ---

def test_partition_checks_cover_and_sizes():
    Partition.from_groups([(0, 1), (2, 3)], 4)
    with pytest.raises(ValueError):
        Partition.from_groups([(0, 1), (1, 2)], 4)  # overlap
    with pytest.raises(ValueError):
        Partition.from_groups([(0, 1), (2,)], 4)  # unequal sizes
    with pytest.raises(ValueError):
        Partition.from_groups([(0, 1), (2, 4)], 4)  # out of range


# --- schedule construction ---

def test_degenerate_single_group_single_subframe():
    sched = build_schedule(4, 1, 1, contiguous(4, 1))
    assert sched.vectors.shape == (1, 4)
    assert np.array_equal(sched.vectors[0], np.ones(4))


def test_two_group_hand_expansion():
    # slots: psi_1 = +1 everywhere; psi_2 = +1 on group 1, -1 on group 2
    sched = build_schedule(4, 2, 1, contiguous(4, 2))
    assert sched.vectors.shape == (2, 4)
    assert np.array_equal(sched.vectors[0], [1, 1, 1, 1])
    assert np.array_equal(sched.vectors[1], [1, 1, -1, -1])


def test_subframe_slot_interleaving():
    # slot t = k + b*Q carries subframe code v_b on every group
    M, Q, B = 8, 2, 2
    sched = build_schedule(M, Q, B, contiguous(M, Q))
    assert sched.n_slots == Q * B
    g0 = list(sched.partition.groups[0])
    for b in range(B):
        v = sched.subframe_codes[:, b]
        np.testing.assert_array_equal(sched.vectors[b * Q][g0], v)


def test_all_entries_unit_modulus():
    for (M, Q, B) in [(8, 2, 4), (16, 4, 2), (32, 4, 8)]:
        sched = build_schedule(M, Q, B, contiguous(M, Q))
        assert np.all(np.abs(sched.vectors) == 1)


def test_schedule_validation_errors():
    with pytest.raises(ValueError):
        build_schedule(8, 2, 5, contiguous(8, 2))  # B > M'
    with pytest.raises(ValueError):
        build_schedule(12, 3, 1, contiguous(12, 3))  # non-power-of-two
    with pytest.raises(ValueError):
        build_schedule(8, 2, 0, contiguous(8, 2))
    with pytest.raises(ValueError):
        build_schedule(16, 2, 2, contiguous(8, 2))  # partition mismatch


# --- pilot reception ---

def test_zero_channel_zero_noise_gives_zero_rx():
    F = np.zeros((3, 4), dtype=complex)
    h = np.zeros(4, dtype=complex)
    sched = build_schedule(4, 2, 1, contiguous(4, 2))
    obs = simulate_pilot_rx(fake_realization(F, h), sched, 1.0, 0.0,
                            np.random.default_rng(0))
    assert np.all(obs.subframes == 0)


def test_scalar_cascade():
    f = np.array([[1.0 + 2.0j], [0.5 - 1.0j]])
    h = np.array([0.3 + 0.4j])
    sched = build_schedule(1, 1, 1, contiguous(1, 1))
    obs = simulate_pilot_rx(fake_realization(f, h), sched, 1.0, 0.0,
                            np.random.default_rng(0))
    assert np.allclose(obs.subframes[0][:, 0], f[:, 0] * h[0])


def test_rx_matches_model_equation_recomputation():
    # independent slot-by-slot evaluation of the receive model
    rng = np.random.default_rng(4)
    N, M, Q, B = 5, 8, 2, 3
    F, h = random_instance(rng, N, M)
    sched = build_schedule(M, Q, B, contiguous(M, Q))
    obs = simulate_pilot_rx(fake_realization(F, h), sched, 1.0, 0.0,
                            np.random.default_rng(1))
    for t in range(sched.n_slots):
        y_t = F @ np.diag(sched.vectors[t]) @ h
        b, k = divmod(t, Q)
        assert np.allclose(obs.subframes[b][:, k], y_t, atol=1e-12)


def test_power_normalization_leaves_signal_invariant():
    rng = np.random.default_rng(8)
    F, h = random_instance(rng, 4, 8)
    sched = build_schedule(8, 2, 2, contiguous(8, 2))
    a = simulate_pilot_rx(fake_realization(F, h), sched, 1.0, 0.0,
                          np.random.default_rng(0))
    b = simulate_pilot_rx(fake_realization(F, h), sched, 9.0, 0.0,
                          np.random.default_rng(0))
    assert np.allclose(a.subframes, b.subframes, atol=1e-12)


def test_rx_input_validation():
    F, h = random_instance(np.random.default_rng(0), 4, 8)
    sched = build_schedule(8, 2, 2, contiguous(8, 2))
    with pytest.raises(ValueError):
        simulate_pilot_rx(fake_realization(F, h), sched, 0.0, 0.1,
                          np.random.default_rng(0))
    with pytest.raises(ValueError):
        simulate_pilot_rx(fake_realization(F, h), sched, 1.0, -0.1,
                          np.random.default_rng(0))
    with pytest.raises(ValueError):
        simulate_pilot_rx(fake_realization(F[:, :4], h[:4]), sched, 1.0, 0.0,
                          np.random.default_rng(0))


def test_random_phase_vectors_unit_modulus_and_deterministic():
    a = random_phase_vectors(16, 8, np.random.default_rng(2))
    b = random_phase_vectors(16, 8, np.random.default_rng(2))
    assert a.shape == (8, 16)
    assert np.allclose(np.abs(a), 1.0, atol=1e-12)
    assert np.array_equal(a, b)


# --- decoupling ---

def group_slice(F, h, partition, q):
    idx = list(partition.groups[q])
    return F[:, idx], h[idx]


def test_decoupling_exact_toy_instance():
    rng = np.random.default_rng(12)
    N, M, Q, B = 3, 4, 2, 2
    F, h = random_instance(rng, N, M)
    sched = build_schedule(M, Q, B, contiguous(M, Q))
    obs = simulate_pilot_rx(fake_realization(F, h), sched, 1.0, 0.0,
                            np.random.default_rng(0))
    z = decouple(obs, sched)
    for b in range(B):
        for q in range(Q):
            Fq, hq = group_slice(F, h, sched.partition, q)
            want = Fq @ (sched.subframe_codes[:, b] * hq)
            assert np.allclose(z[b][:, q], want, atol=1e-12)


@pytest.mark.parametrize("N,M,Q,B", [(4, 8, 2, 4), (16, 32, 4, 8),
                                     (8, 16, 4, 4), (6, 8, 8, 1)])
def test_decoupling_exactness_across_shapes(N, M, Q, B):
    rng = np.random.default_rng(Q * 100 + B)
    F, h = random_instance(rng, N, M)
    part = contiguous(M, Q)
    sched = build_schedule(M, Q, B, part)
    obs = simulate_pilot_rx(fake_realization(F, h), sched, 1.0, 0.0,
                            np.random.default_rng(0))
    z = decouple(obs, sched)
    for b in range(B):
        for q in range(Q):
            Fq, hq = group_slice(F, h, part, q)
            want = Fq @ (sched.subframe_codes[:, b] * hq)
            err = np.linalg.norm(z[b][:, q] - want)
            assert err <= 1e-10 * max(np.linalg.norm(hq), 1.0)


def test_single_group_decoupling_is_identity():
    rng = np.random.default_rng(13)
    F, h = random_instance(rng, 4, 8)
    sched = build_schedule(8, 1, 4, contiguous(8, 1))
    obs = simulate_pilot_rx(fake_realization(F, h), sched, 1.0, 0.0,
                            np.random.default_rng(0))
    z = decouple(obs, sched)
    assert np.allclose(z, obs.subframes, atol=1e-12)


def test_energy_preserved_up_to_group_scaling():
    rng = np.random.default_rng(14)
    F, h = random_instance(rng, 8, 16)
    sched = build_schedule(16, 4, 2, contiguous(16, 4))
    obs = simulate_pilot_rx(fake_realization(F, h), sched, 1.0, 0.05,
                            np.random.default_rng(3))
    z = decouple(obs, sched)
    for b in range(sched.b_subframes):
        ey = np.linalg.norm(obs.subframes[b]) ** 2
        ez = np.linalg.norm(z[b]) ** 2
        assert abs(ey - 4 * ez) <= 1e-9 * ey


def test_decoupled_noise_variance_and_circularity():
    # noise-only input: per-entry variance sigma^2/(P*Q), circular symmetry
    N, M, Q, B = 8, 16, 4, 4
    P, sig2 = 2.0, 0.3
    F = np.zeros((N, M), dtype=complex)
    h = np.zeros(M, dtype=complex)
    sched = build_schedule(M, Q, B, contiguous(M, Q))
    rng = np.random.default_rng(15)
    samples = []
    for _ in range(1000):
        obs = simulate_pilot_rx(fake_realization(F, h), sched, P, sig2, rng)
        samples.append(decouple(obs, sched).ravel())
    zs = np.concatenate(samples)  # 1000*B*N*Q >= 1e5 draws
    var = np.mean(np.abs(zs) ** 2)
    pseudo = np.mean(zs ** 2)
    assert abs(var - sig2 / (P * Q)) < 0.1 * sig2 / (P * Q)
    assert np.abs(pseudo) < 0.01 * var * 10
