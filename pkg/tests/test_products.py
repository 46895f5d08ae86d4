import math

import numpy as np
import pytest

from dobrushin.channels import (
    amplitude_damping,
    bit_swap,
    dephasing_x,
    dephasing_z,
    replacement_channel,
    unitary_channel,
)
from dobrushin.linalg import haar_unitary, projector, random_density_matrix, trace_norm
from dobrushin.products import (
    ChannelSequence,
    contraction_clock_bound,
    forward_replacement_check,
    good_block_bound,
    pullback_boundary,
    pullback_consistency,
    random_sequence,
    sequence_from_json,
    sequence_to_json,
    window_kappa,
    window_product,
)

STATE_BASIS = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.array([[0.5, 0.5], [0.5, 0.5]]), np.array([[0.5, -0.5j], [0.5j, 0.5]])]


def alternating():
    return ChannelSequence.periodic([dephasing_z(), dephasing_x()])


def test_empty_window_is_identity():
    seq = ChannelSequence.constant(amplitude_damping(0.3))
    assert np.allclose(window_product(seq, 3, 3).superop, np.eye(4))


@pytest.mark.parametrize("n", [1, 2, 5])
def test_constant_amplitude_damping_window(n):
    g = 0.3
    prod = window_product(ChannelSequence.constant(amplitude_damping(g)), 0, n)
    oracle = amplitude_damping(1 - (1 - g) ** n)
    for rho in STATE_BASIS:
        assert np.allclose(prod(rho), oracle(rho), atol=1e-10)


def test_window_order_is_latest_first(rng):
    seq = random_sequence(2, 3, seed=9)
    rho = random_density_matrix(rng, 2)
    assert np.allclose(window_product(seq, 0, 3)(rho), seq[2](seq[1](seq[0](rho))), atol=1e-12)


def test_alternating_dephasing_window_is_replacement():
    prod = window_product(alternating(), 0, 2)
    assert np.allclose(prod.superop, replacement_channel(np.eye(2) / 2).superop, atol=1e-12)
    assert window_kappa(alternating(), 0, 2).value == pytest.approx(0.0, abs=1e-12)


def test_window_kappa_examples(rng):
    ad = ChannelSequence.constant(amplitude_damping(0.36))
    assert window_kappa(ad, 0, 3).value == pytest.approx(0.512, abs=1e-12)
    U = ChannelSequence.constant(unitary_channel(haar_unitary(rng, 2)))
    assert window_kappa(U, 0, 4).value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_window_kappa_submultiplicative(seed):
    seq = random_sequence(2, 6, seed=seed)
    u = 1 + seed % 4
    whole = window_kappa(seq, 0, 6).value
    assert whole <= window_kappa(seq, u, 6).value * window_kappa(seq, 0, u).value + 2e-6


def test_window_outside_interval_raises():
    seq = random_sequence(2, 3, seed=1)
    with pytest.raises(IndexError):
        window_product(seq, 0, 4)
    with pytest.raises(ValueError):
        window_product(seq, 2, 1)


@pytest.mark.parametrize("rule", ["dual", "kappa"])
def test_pullback_amplitude_damping_fixed_point(rule):
    seq = ChannelSequence.constant(amplitude_damping(0.5))
    pb = pullback_boundary(seq, 7, tol=1e-10, rule=rule)
    assert pb.converged
    assert np.allclose(pb.rho_t, np.diag([1.0, 0.0]), atol=1e-8)


def test_pullback_replacement_depth_one(rng):
    eta = random_density_matrix(rng, 2)
    pb = pullback_boundary(ChannelSequence.constant(replacement_channel(eta)), 0, rule="kappa", kappa_every=1)
    assert pb.depth_used == 1
    assert np.allclose(pb.rho_t, eta, atol=1e-12)


def test_pullback_reference_independence():
    seq = ChannelSequence.constant(amplitude_damping(0.4))
    a = pullback_boundary(seq, 0, tau=np.eye(2) / 2, tol=1e-6, rule="kappa")
    b = pullback_boundary(seq, 0, tau=np.diag([0.0, 1.0]), tol=1e-6, rule="kappa")
    assert trace_norm(a.rho_t - b.rho_t) <= 2 * max(a.kappa, b.kappa)


def test_pullback_bit_swap_no_memory_loss():
    pb = pullback_boundary(ChannelSequence.constant(bit_swap()), 0, max_depth=32, rule="kappa")
    assert not pb.converged
    assert pb.kappa == pytest.approx(1.0, abs=1e-9)


def test_pullback_consistency_random():
    seq = random_sequence(2, 200, seed=11)
    gap, ok = pullback_consistency(seq, 150, tol=1e-9)
    assert ok, gap


def test_forward_replacement_examples():
    ad = ChannelSequence.constant(amplitude_damping(0.75))
    rep = forward_replacement_check(ad, 0, 2)
    assert rep.kappa.value == pytest.approx(0.25, abs=1e-12)
    assert 0.25 - 1e-6 <= rep.dist <= 1.0 + 1e-6
    assert rep.ok
    rep = forward_replacement_check(alternating(), 0, 2)
    assert rep.dist == pytest.approx(0.0, abs=1e-9)
    tau = np.eye(2) / 2
    assert forward_replacement_check(ad, 0, 2, tau=tau, tau_prime=tau).drift == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_forward_replacement_sandwich_random(seed):
    seq = random_sequence(2, 1 + seed, seed=100 + seed)
    assert forward_replacement_check(seq, 0, 1 + seed).ok


def test_clock_bound_examples():
    cb = contraction_clock_bound([0.5, 0.5], 0.4)
    assert cb.product_bound == pytest.approx(0.25)
    assert cb.exp_bound == pytest.approx(math.exp(-1))
    assert cb.G_r == 2
    assert contraction_clock_bound([0.0, 0.0], 0.5).product_bound == 1.0
    n = 4
    cb = contraction_clock_bound([0.2] * n, 0.1)
    ad = ChannelSequence.constant(amplitude_damping(0.36))
    assert window_kappa(ad, 0, n).value == pytest.approx(cb.product_bound, abs=1e-12)


@pytest.mark.parametrize("a", [[-0.1], [1.5], [np.nan]])
def test_clock_bound_rejects_bad_steps(a):
    with pytest.raises(ValueError):
        contraction_clock_bound(a, 0.5)


def test_good_block_examples(rng):
    rep = good_block_bound(alternating(), 0, 8, ell=2, M=2, q=1e-9)
    assert rep.holds and rep.bound <= 1e-30 and rep.consistent
    U = ChannelSequence.constant(unitary_channel(haar_unitary(rng, 2)))
    assert not good_block_bound(U, 0, 6, ell=1, M=2, q=0.99).holds
    ad = ChannelSequence.constant(amplitude_damping(0.75))
    rep = good_block_bound(ad, 0, 5, ell=1, M=1, q=0.5)
    assert rep.holds
    assert rep.bound == pytest.approx(0.5 ** 5)
    assert rep.kappa_window == pytest.approx(rep.bound, abs=1e-12)


def test_sequence_json_round_trip(rng):
    seq = random_sequence(2, 4, seed=3, start=-2)
    back = sequence_from_json(sequence_to_json(seq))
    assert back.interval == (-2, 2)
    for n in range(-2, 2):
        assert np.allclose(back[n].superop, seq[n].superop, atol=1e-12)
    per = sequence_from_json(sequence_to_json(ChannelSequence.periodic([dephasing_z(), dephasing_x()], interval=(0, 10))))
    assert np.allclose(per[3].superop, dephasing_x().superop)


def test_mixed_dimensions_rejected():
    from dobrushin.channels import depolarizing

    with pytest.raises(ValueError):
        ChannelSequence([depolarizing(0.1, 2), depolarizing(0.1, 3)])


def test_pure_reference_rejected_only_when_invalid():
    seq = ChannelSequence.constant(amplitude_damping(0.5))
    pullback_boundary(seq, 0, tau=projector(np.array([0.0, 1.0])))
    with pytest.raises(ValueError):
        pullback_boundary(seq, 0, tau=np.diag([1.0, 1.0]))
