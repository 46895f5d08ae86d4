"""Small log-det barrier solver for linear matrix inequalities.

Solves ``maximize c @ x`` subject to ``F_k(x) = F0_k + sum_a x_a F_{a,k} >= 0``
for a handful of Hermitian LMIs with at most a few hundred real variables.
Problems whose start point is not strictly feasible are solved through an
exact-penalty slack variable; the result then carries ``relaxed=True``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LmiGroup:
    """A stack of ``K`` LMIs of common size ``n``.

    ``F0`` has shape ``(K, n, n)`` and ``Fa`` has shape ``(p, K, n, n)``.
    """

    F0: np.ndarray
    Fa: np.ndarray

    def value(self, x):
        return self.F0 + np.einsum("a,akij->kij", x, self.Fa)

    @property
    def size(self):
        return self.F0.shape[0] * self.F0.shape[1]


@dataclass
class LmiResult:
    x: np.ndarray
    objective: float
    gap: float
    relaxed: bool
    slack: float
    iterations: int


def hermitian_basis(n):
    """Orthonormal (Hilbert-Schmidt) basis of ``n x n`` Hermitian matrices."""
    basis = []
    for k in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[k, k] = 1.0
        basis.append(E)
    s = 1.0 / np.sqrt(2.0)
    for j in range(n):
        for k in range(j + 1, n):
            E = np.zeros((n, n), dtype=complex)
            E[j, k] = E[k, j] = s
            basis.append(E)
            E = np.zeros((n, n), dtype=complex)
            E[j, k] = 1j * s
            E[k, j] = -1j * s
            basis.append(E)
    return np.array(basis)


def hermitian_from_coords(x, basis):
    return np.einsum("a,aij->ij", x, basis)


def _barrier(groups, x, need_derivs=True):
    p = x.shape[0]
    val = 0.0
    g = np.zeros(p)
    H = np.zeros((p, p))
    factors = []
    for grp in groups:
        F = grp.value(x)
        w, V = np.linalg.eigh(0.5 * (F + np.conj(np.swapaxes(F, -1, -2))))
        if np.any(w <= 0):
            return None
        val -= float(np.sum(np.log(w)))
        R = V * (w ** -0.5)[:, None, :]
        factors.append(R)
        if need_derivs:
            # G_a = R^* F_a R is Hermitian, so tr(G_a G_b) = <G_a, G_b>_HS
            G = np.matmul(np.matmul(np.conj(np.swapaxes(R, -1, -2)), grp.Fa), R)
            g -= np.real(np.einsum("akii->a", G))
            Gf = G.reshape(p, -1)
            H += np.real(Gf @ Gf.conj().T)
    return val, g, H, factors


def _max_step(groups, factors, dx):
    """Largest step keeping every LMI positive definite."""
    step = np.inf
    for grp, R in zip(groups, factors):
        dF = np.einsum("a,akij->kij", dx, grp.Fa)
        D = np.matmul(np.matmul(np.conj(np.swapaxes(R, -1, -2)), dF), R)
        lo = float(np.min(np.linalg.eigvalsh(0.5 * (D + np.conj(np.swapaxes(D, -1, -2))))))
        if lo < 0:
            step = min(step, -1.0 / lo)
    return step


def _centre(c, groups, x, t, max_newton=80):
    it = 0
    for it in range(1, max_newton + 1):
        f_bar, g_bar, H, factors = _barrier(groups, x)
        grad = -t * c + g_bar
        try:
            dx = -np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            dx = -np.linalg.lstsq(H, grad, rcond=None)[0]
        dec = float(-grad @ dx)
        if not np.isfinite(dec) or dec / 2 < 1e-10:
            # converged, or the Hessian is numerically indefinite
            break
        step = min(1.0, 0.99 * _max_step(groups, factors, dx))
        while step > 1e-10:
            trial = _barrier(groups, x + step * dx, need_derivs=False)
            # decrease formed directly: t * c @ x can be huge under a penalty
            if trial is not None and -t * step * (c @ dx) + (trial[0] - f_bar) <= -0.25 * step * dec:
                break
            step *= 0.5
        else:
            break
        x = x + step * dx
        if step < 1e-6:
            # ill-conditioned near a degenerate optimum; further steps stall
            break
    return x, it


def _strictly_feasible(groups, x):
    return _barrier(groups, x, need_derivs=False) is not None


def _with_slack(groups, p):
    """Append a common slack ``s``: ``F_k(x) + s I >= 0`` and ``s >= 0``."""
    aug = []
    for grp in groups:
        K, n, _ = grp.F0.shape
        plus_I = np.broadcast_to(np.eye(n), (1, K, n, n))
        aug.append(LmiGroup(grp.F0, np.concatenate([grp.Fa, plus_I], axis=0)))
    nonneg = LmiGroup(np.zeros((1, 1, 1)), np.zeros((p + 1, 1, 1, 1)))
    nonneg.Fa[-1, 0, 0, 0] = 1.0
    aug.append(nonneg)
    return aug


def _path_follow(c, groups, x, tol, mu, max_outer, t=1.0):
    m = sum(g.size for g in groups)
    iters = 0
    for _ in range(max_outer):
        x, k = _centre(c, groups, x, t)
        iters += k
        if m / t < tol:
            break
        t /= mu
    return x, m / t, iters


def solve_lmi(c, groups, x0=None, tol=1e-9, penalty=1e8, mu=0.2, max_outer=80):
    """Maximise ``c @ x`` over the LMI-feasible set by a barrier path-following method.

    Parameters
    ----------
    c : ndarray, shape (p,)
    groups : list of LmiGroup
    x0 : ndarray, optional
        Starting point.  Defaults to zero.
    tol : float
        Target duality-gap surrogate ``m / t``.
    penalty : float
        Used when ``x0`` is not strictly feasible.  The problem is then
        solved as ``max c @ x - penalty * s`` subject to ``F_k(x) + s I >= 0``,
        ``s >= 0``, which always has an interior.  The final ``s`` is returned
        as ``slack``; callers that need exact feasibility must absorb it.
    """
    c = np.asarray(c, dtype=float)
    p = c.shape[0]
    x = np.zeros(p) if x0 is None else np.asarray(x0, dtype=float)
    if _strictly_feasible(groups, x):
        x, gap, iters = _path_follow(c, groups, x, tol, mu, max_outer)
        return LmiResult(x=x, objective=float(c @ x), gap=gap, relaxed=False, slack=0.0, iterations=iters)
    lo = min(float(np.min(np.linalg.eigvalsh(g.value(x)))) for g in groups)
    z = np.concatenate([x, [max(0.0, -lo) + 1.0]])
    cz = np.concatenate([c, [-penalty]])
    # start where the penalty term and the barrier have comparable weight
    z, gap, iters = _path_follow(cz, _with_slack(groups, p), z, tol, mu, max_outer + 20, t=1.0 / penalty)
    x = z[:-1]
    return LmiResult(x=x, objective=float(c @ x), gap=gap, relaxed=True, slack=float(z[-1]), iterations=iters)
