import math

import numpy as np
import pytest

from dobrushin.channels import (
    QuantumChannel,
    amplitude_damping,
    compose,
    dephasing_z,
    depolarizing,
    identity_channel,
    random_channel,
    replacement_channel,
    unitary_channel,
)
from dobrushin.contraction import (
    EXACT,
    LOWER,
    diameter_sample,
    diamond_witness,
    induced_11_norm,
    kappa_tr,
    kappa_upper_aggregate,
    rank_one_difference_value,
    replacement_distance,
    replacement_superop,
    s0,
)
from dobrushin.linalg import haar_unitary, random_density_matrix, trace_norm


@pytest.mark.parametrize("gamma", [0.19, 0.36, 0.75])
def test_amplitude_damping_closed_form(gamma):
    rep = kappa_tr(amplitude_damping(gamma))
    assert rep.mode == EXACT
    assert rep.value == pytest.approx(math.sqrt(1 - gamma), abs=1e-12)
    opt = kappa_tr(amplitude_damping(gamma), method="optimize")
    assert opt.mode == LOWER
    assert opt.value == pytest.approx(math.sqrt(1 - gamma), abs=1e-6)


def test_witness_reproduces_value():
    for ch in (amplitude_damping(0.36), random_channel(3, 2, seed=4)):
        rep = kappa_tr(ch)
        u, v = rep.witness
        assert abs(np.vdot(u, v)) <= 1e-8
        assert rank_one_difference_value(ch.superop, u, v) == pytest.approx(rep.value, abs=1e-8)


@pytest.mark.parametrize("d", [2, 3])
def test_replacement_is_zero(rng, d):
    assert kappa_tr(replacement_channel(random_density_matrix(rng, d))).value <= 1e-9


def test_depolarizing_qutrit():
    assert kappa_tr(depolarizing(0.25, 3)).value == pytest.approx(0.75, abs=1e-6)


def test_dephasing_one():
    assert kappa_tr(dephasing_z()).value == pytest.approx(1.0, abs=1e-12)


def test_closed_form_restricted_to_qubits():
    with pytest.raises(ValueError):
        kappa_tr(depolarizing(0.1, 3), method="closed_form")


def test_s0_examples(rng):
    assert s0(amplitude_damping(0.36)) == pytest.approx(0.8, abs=1e-12)
    assert s0(unitary_channel(haar_unitary(rng, 3))) == pytest.approx(1.0, abs=1e-12)
    assert s0(replacement_channel(random_density_matrix(rng, 2))) <= 1e-12


def test_induced_norm_examples(rng):
    ch = random_channel(2, 2, seed=3)
    assert induced_11_norm(ch).value == pytest.approx(1.0, abs=1e-8)
    tau = random_density_matrix(rng, 2)
    R = replacement_channel(tau)
    assert induced_11_norm(R.superop - replacement_superop(R, tau)).value <= 1e-12
    a, b = random_density_matrix(rng, 3), random_density_matrix(rng, 3)
    diff = replacement_channel(a).superop - replacement_channel(b).superop
    rep = induced_11_norm(diff)
    assert rep.value == pytest.approx(trace_norm(a - b), abs=1e-7)
    assert rep.upper >= rep.value - 1e-12


def test_replacement_distance_examples(rng):
    eta = random_density_matrix(rng, 2)
    rd = replacement_distance(replacement_channel(eta), np.eye(2) / 2)
    assert rd.dist <= 1e-10 and rd.kappa.value <= 1e-10 and rd.sandwich_ok
    ad2 = compose(amplitude_damping(0.75), amplitude_damping(0.75))
    rd = replacement_distance(ad2, np.eye(2) / 2)
    assert rd.kappa.value == pytest.approx(0.25, abs=1e-12)
    assert 0.25 - 1e-6 <= rd.dist <= 1.0 + 1e-6 and rd.sandwich_ok
    rd = replacement_distance(dephasing_z(), random_density_matrix(rng, 2))
    assert rd.kappa.value == pytest.approx(1.0) and rd.dist <= 4 and rd.sandwich_ok


def test_upper_aggregate_examples():
    up = kappa_upper_aggregate(depolarizing(0.5, 2))
    assert up.value <= 0.5 + 1e-6
    up = kappa_upper_aggregate(amplitude_damping(0.5))
    assert up.value == pytest.approx(1.0, abs=1e-6)
    assert kappa_tr(amplitude_damping(0.5)).value < up.value
    up = kappa_upper_aggregate(replacement_channel(np.eye(2) / 2))
    assert up.value <= 1e-6


@pytest.mark.parametrize("d", [2, 3])
def test_upper_bounds_dominate(d):
    for seed in range(5):
        ch = random_channel(d, 2, seed=seed)
        k = kappa_tr(ch).value
        assert k <= kappa_upper_aggregate(ch).value + 1e-6
        assert k <= math.sqrt(d) * s0(ch) + 1e-9
        assert s0(ch) <= 1 + 1e-12 or d > 2


def test_diamond_witness(rng):
    for ch in (random_channel(3, 2, seed=1), replacement_channel(random_density_matrix(rng, 2)), identity_channel(2)):
        assert diamond_witness(ch) == pytest.approx(1.0, abs=1e-12)


def test_submultiplicative_pairs():
    for i in range(40):
        d = 2 + i % 2
        A, B = random_channel(d, 2, seed=100 + i), random_channel(d, 3, seed=200 + i)
        assert kappa_tr(compose(A, B)).value <= kappa_tr(A).value * kappa_tr(B).value + 2e-6


@pytest.mark.parametrize("d", [2, 3])
def test_diameter_identity(d):
    ch = random_channel(d, 2, seed=31)
    k = kappa_tr(ch).value
    assert diameter_sample(ch, count=10_000) <= k + 1e-6


def test_range_and_zero_characterisation():
    for seed in range(6):
        k = kappa_tr(random_channel(2 + seed % 2, 1 + seed % 3, seed=seed)).value
        assert 0 <= k <= 1 + 1e-12


def test_complex_traceless_control(rng):
    ch = random_channel(3, 2, seed=8)
    k = kappa_tr(ch).value
    for _ in range(50):
        Z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        Z -= np.trace(Z) / 3 * np.eye(3)
        assert trace_norm(ch(Z)) <= 2 * k * trace_norm(Z) + 1e-9


def test_raw_superop_accepted():
    S = amplitude_damping(0.36).superop
    assert kappa_tr(QuantumChannel(S)).value == pytest.approx(0.8)
