import math

import numpy as np
import pytest

from dobrushin.channels import (
    amplitude_damping,
    dephasing_x,
    dephasing_z,
    depolarizing,
    random_channel,
    replacement_channel,
    unitary_channel,
    werner_holevo_like,
)
from dobrushin.coefficients import (
    alpha_doeblin,
    alpha_md,
    hilbert_metric,
    partial_transpose,
    projective_contraction_c,
    projective_diameter_lower,
    projective_distance,
    ratio_min,
)
from dobrushin.contraction import kappa_tr
from dobrushin.linalg import haar_unitary, random_density_matrix, random_unit_vectors


def _min_violation(channel, B, count, seed):
    # independent oracle: lambda_min(Phi(P) - B) over random pure states
    rng = np.random.default_rng(seed)
    worst = np.inf
    for psi in random_unit_vectors(rng, count, channel.d):
        out = channel(np.outer(psi, psi.conj()))
        worst = min(worst, np.linalg.eigvalsh(out - B)[0])
    return worst


def test_partial_transpose_of_product(rng):
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    B = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.allclose(partial_transpose(np.kron(A, B), 2, 3), np.kron(A, B.T))


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_alpha_md_depolarizing(p):
    cert = alpha_md(depolarizing(p))
    assert cert.verified
    assert cert.alpha == pytest.approx(p, abs=1e-6)
    assert np.allclose(cert.B, p * np.eye(2) / 2, atol=1e-6)
    assert _min_violation(depolarizing(p), cert.B, 10_000, 3) >= -1e-8


def test_alpha_md_werner_holevo_qubit():
    cert = alpha_md(werner_holevo_like(2))
    assert cert.verified
    assert cert.alpha >= 2 / 3 - 1e-6
    assert np.allclose(cert.B, np.eye(2) / 3, atol=1e-6)


@pytest.mark.parametrize("gamma", [0.3, 0.5])
def test_alpha_md_amplitude_damping_vanishes(gamma):
    assert alpha_md(amplitude_damping(gamma)).alpha <= 1e-6


def test_alpha_md_dephasing_vanishes():
    assert alpha_md(dephasing_z()).alpha <= 1e-6


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_alpha_md_brackets_and_bounds_kappa(seed):
    ch = random_channel(2, 4, seed)
    cert = alpha_md(ch)
    assert cert.verified
    assert cert.alpha <= cert.alpha_upper + 1e-6
    assert _min_violation(ch, cert.B, 2000, seed) >= -1e-8
    assert kappa_tr(ch).value <= 1 - cert.alpha + 1e-8


def test_alpha_doeblin_werner_holevo_zero():
    assert alpha_doeblin(werner_holevo_like(2)).alpha == pytest.approx(0.0, abs=1e-6)


def test_alpha_doeblin_replacement_one(rng):
    tau = random_density_matrix(rng, 2)
    res = alpha_doeblin(replacement_channel(tau))
    assert res.alpha == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(res.tau_hat, tau, atol=1e-6)


@pytest.mark.parametrize("p", [0.3, 0.6])
def test_alpha_doeblin_depolarizing(p):
    res = alpha_doeblin(depolarizing(p))
    assert res.alpha == pytest.approx(p, abs=1e-6)


@pytest.mark.parametrize("seed", [4, 5])
def test_doeblin_decomposition_is_completely_positive(seed):
    ch = random_channel(2, 4, seed)
    res = alpha_doeblin(ch)
    d = ch.d
    # J(Phi) - tau_hat (x) I/d must be PSD: the remainder is CP
    rem = ch.choi - np.kron(res.tau_hat, np.eye(d)) / d
    assert np.linalg.eigvalsh((rem + rem.conj().T) / 2)[0] >= -1e-8
    assert res.alpha <= alpha_md(ch).alpha + 1e-6


def test_hilbert_metric_examples():
    A = np.diag([1.0, 2.0])
    assert hilbert_metric(A, A) == pytest.approx(0.0, abs=1e-12)
    assert hilbert_metric(np.eye(2), 2 * np.eye(2)) == pytest.approx(0.0, abs=1e-12)
    assert hilbert_metric(A, np.diag([2.0, 1.0])) == pytest.approx(math.log(4), abs=1e-12)
    assert hilbert_metric(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == np.inf


def test_hilbert_metric_unitary_invariant(rng):
    A = random_density_matrix(rng, 3)
    B = random_density_matrix(rng, 3)
    U = haar_unitary(rng, 3)
    h = hilbert_metric(A, B)
    assert hilbert_metric(U @ A @ U.conj().T, U @ B @ U.conj().T) == pytest.approx(h, rel=1e-9)


def test_ratio_and_projective_distance():
    A, B = np.diag([1.0, 2.0]), np.diag([2.0, 1.0])
    assert ratio_min(A, B) == pytest.approx(0.5)
    assert projective_distance(A, B) == pytest.approx((1 - 0.25) / (1 + 0.25))
    assert projective_distance(A, 3 * A) == pytest.approx(0.0, abs=1e-12)


def test_projective_contraction_examples():
    assert projective_contraction_c(replacement_channel(np.eye(2) / 2)) == pytest.approx(0.0, abs=1e-12)
    assert projective_contraction_c(amplitude_damping(0.5)) == pytest.approx(1.0)
    assert projective_contraction_c(depolarizing(0.9)) < 1


def test_projective_diameter_examples():
    assert projective_diameter_lower(amplitude_damping(0.5)) == np.inf
    assert projective_diameter_lower(replacement_channel(np.eye(2) / 2)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", [6, 7])
def test_birkhoff_bound_dominates_kappa(seed):
    ch = random_channel(2, 4, seed)
    delta = projective_diameter_lower(ch)
    assert np.isfinite(delta)
    assert math.tanh(delta / 4) >= kappa_tr(ch).value - 1e-4


def test_unitary_has_no_minorization(rng):
    assert alpha_md(unitary_channel(haar_unitary(rng, 2))).alpha <= 1e-6
    assert alpha_doeblin(dephasing_x()).alpha <= 1e-6
