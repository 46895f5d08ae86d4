import json

import numpy as np
import pytest

from dobrushin.channels import (
    ChannelError,
    QuantumChannel,
    amplitude_damping,
    bit_swap,
    channel_from_json,
    channel_spec,
    channel_to_json,
    compose,
    dephasing_x,
    dephasing_z,
    depolarizing,
    from_kraus,
    identity_channel,
    is_bistochastic,
    is_strictly_positive,
    make_named,
    random_channel,
    replacement_channel,
    unitary_channel,
    werner_holevo_like,
)
from dobrushin.linalg import basis_state, haar_unitary, projector, random_density_matrix, trace_norm


def test_identity_from_kraus(rng):
    ch = from_kraus([np.eye(3)])
    X = rng.standard_normal((3, 3))
    np.testing.assert_allclose(ch(X), X, atol=1e-14)


def test_amplitude_damping_excited_state():
    out = amplitude_damping(0.36)(np.diag([0.0, 1.0]))
    np.testing.assert_allclose(out, np.diag([0.36, 0.64]), atol=1e-14)


def test_tp_violation():
    with pytest.raises(ChannelError, match="trace preserving"):
        from_kraus([np.eye(2), np.eye(2)])


def test_transpose_map_fails_cp():
    # X -> X^T is positive and trace preserving but not completely positive
    S = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            S[j + 2 * i, i + 2 * j] = 1.0
    with pytest.raises(ChannelError, match="completely positive"):
        QuantumChannel(S)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        amplitude_damping(0.2)(np.eye(3))
    with pytest.raises(ValueError):
        compose(amplitude_damping(0.2), depolarizing(0.1, 3))


def test_replacement_outputs_tau(rng):
    tau = random_density_matrix(rng, 3)
    R = replacement_channel(tau)
    sigma = random_density_matrix(rng, 3)
    np.testing.assert_allclose(R(sigma), tau, atol=1e-12)
    X = rng.standard_normal((3, 3))
    assert np.trace(R(X)) == pytest.approx(np.trace(X))
    assert len(R.kraus) <= 9


def test_alternating_dephasing_is_replacement():
    prod = compose(dephasing_x(), dephasing_z())
    np.testing.assert_allclose(prod(projector(basis_state(2, 0))), np.eye(2) / 2, atol=1e-14)
    np.testing.assert_allclose(prod.superop, replacement_channel(np.eye(2) / 2).superop, atol=1e-12)


def test_random_channel_trace_preserving(rng):
    ch = random_channel(3, 2, seed=5)
    X = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.trace(ch(X)) == pytest.approx(np.trace(X), abs=1e-12)
    assert ch.tp_defect() <= 1e-12
    w = np.linalg.eigvalsh(ch(random_density_matrix(rng, 3)))
    assert w.min() >= -1e-9


def test_random_channel_reproducible():
    a = random_channel(2, 3, seed=11)
    b = random_channel(2, 3, seed=11)
    for Ka, Kb in zip(a.kraus, b.kraus):
        np.testing.assert_array_equal(Ka, Kb)


def test_random_channel_rank_one_is_unitary():
    (K,) = random_channel(3, 1, seed=2).kraus
    np.testing.assert_allclose(K.conj().T @ K, np.eye(3), atol=1e-12)


def test_compose_identity_and_order(rng):
    phi = random_channel(2, 2, seed=1)
    np.testing.assert_allclose(compose(identity_channel(2), phi).superop, phi.superop, atol=1e-14)
    A, B = random_channel(2, 2, seed=2), random_channel(2, 2, seed=3)
    rho = random_density_matrix(rng, 2)
    np.testing.assert_allclose(compose(A, B)(rho), A(B(rho)), atol=1e-12)


@pytest.mark.parametrize("g1,g2", [(0.1, 0.5), (0.36, 0.36), (0.9, 0.2)])
def test_amplitude_damping_composition_law(g1, g2):
    composed = compose(amplitude_damping(g1), amplitude_damping(g2))
    closed = amplitude_damping(1 - (1 - g1) * (1 - g2))
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2))
            E[i, j] = 1
            np.testing.assert_allclose(composed(E), closed(E), atol=1e-10)


def test_compose_associative():
    A, B, C = (random_channel(3, 2, seed=s) for s in (7, 8, 9))
    left = compose(compose(A, B), C)
    right = compose(A, compose(B, C))
    np.testing.assert_allclose(left.superop, right.superop, atol=1e-10)


def test_compose_kraus_products():
    A, B = random_channel(2, 2, seed=4), random_channel(2, 3, seed=5)
    AB = compose(A, B)
    regenerated = from_kraus(AB.kraus)
    np.testing.assert_allclose(regenerated.superop, AB.superop, atol=1e-10)


def test_kraus_superop_round_trip(rng):
    ch = random_channel(3, 2, seed=21)
    for i in range(3):
        for j in range(3):
            E = np.zeros((3, 3))
            E[i, j] = 1
            direct = sum(K @ E @ K.conj().T for K in ch.kraus)
            np.testing.assert_allclose(ch(E), direct, atol=1e-10)


def test_werner_holevo_choi():
    d = 2
    ch = werner_holevo_like(d)
    F = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            F[2 * i + j, 2 * j + i] = 1
    np.testing.assert_allclose(ch.choi, (np.eye(4) + F) / (d * (d + 1)), atol=1e-12)
    assert np.linalg.eigvalsh(ch.choi).min() >= -1e-12


@pytest.mark.parametrize("d", [2, 3])
def test_full_depolarizing_is_replacement(d):
    np.testing.assert_allclose(depolarizing(1.0, d).superop, replacement_channel(np.eye(d) / d).superop, atol=1e-12)


def test_unitary_preserves_trace_norm(rng):
    U = haar_unitary(rng, 3)
    ch = unitary_channel(U)
    X = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert trace_norm(ch(X)) == pytest.approx(trace_norm(X), abs=1e-10)


@pytest.mark.parametrize(
    "kind,params",
    [("amplitude_damping", {"gamma": -0.1}), ("amplitude_damping", {"gamma": 1.2}), ("depolarizing", {"p": 2.0})],
)
def test_named_ranges(kind, params):
    with pytest.raises(ChannelError):
        make_named(kind, **params)


def test_unknown_named_kind():
    with pytest.raises(ChannelError):
        make_named("teleporter")


def test_strict_positivity():
    flag, a = is_strictly_positive(depolarizing(0.5, 2))
    assert flag and a == pytest.approx(0.25, abs=1e-9)
    flag, a = is_strictly_positive(amplitude_damping(0.5))
    assert not flag and a <= 1e-9
    flag, _ = is_strictly_positive(unitary_channel(haar_unitary(np.random.default_rng(0), 2)))
    assert not flag


def test_bistochastic():
    assert is_bistochastic(dephasing_z())
    assert not is_bistochastic(amplitude_damping(0.3))
    np.testing.assert_allclose(amplitude_damping(0.3)(np.eye(2)), np.diag([1.3, 0.7]), atol=1e-14)
    assert is_bistochastic(depolarizing(0.4, 3))


def test_bit_swap_action():
    X = np.array([[1, 2], [3, 4]], dtype=complex)
    np.testing.assert_allclose(bit_swap()(X), np.diag([4, 1]), atol=1e-14)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_json_round_trip_exact(seed):
    ch = random_channel(3, 2, seed=seed)
    text = json.dumps(channel_to_json(ch))
    back = channel_from_json(json.loads(text))
    for K, L in zip(ch.kraus, back.kraus):
        np.testing.assert_array_equal(K, L)


def test_named_spec_round_trip():
    ch = amplitude_damping(0.25)
    spec = channel_spec(ch)
    assert spec == {"kind": "amplitude_damping", "gamma": 0.25}
    np.testing.assert_array_equal(channel_from_json(spec).superop, ch.superop)


def test_json_rejects_malformed():
    with pytest.raises(ChannelError):
        channel_from_json({"d": 2})
