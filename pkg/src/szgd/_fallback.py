"""Pure numpy implementations of the hot kernels.

Signatures and status codes mirror ``_kernels.pyx`` exactly; the compiled
module is preferred when it is importable (see :mod:`szgd._backend`).
Results of the two backends agree to rounding error, not bit for bit.
"""

from __future__ import annotations

import numpy as np

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_DIVERGED = 2
STATUS_DOMAIN = 3


def stiefel_frames(G):
    """Orthonormalize a stack of Gaussian matrices, shape ``(m, n, k)``.

    Each ``G[b] = Q R`` is factored by Householder QR and column ``j`` of
    ``Q`` is multiplied by ``sign(R[j, j])`` so that ``R`` has a positive
    diagonal, which makes ``Q`` exactly Haar distributed.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    Q, R = np.linalg.qr(G, mode="reduced")
    d = np.diagonal(R, axis1=-2, axis2=-1)
    signs = np.where(d < 0.0, -1.0, 1.0)
    return np.ascontiguousarray(Q * signs[..., None, :])


def _pq_values(Q, p, P):
    s = np.einsum("...i,ij,...j->...", P, Q, P)
    return np.maximum(s, 0.0) ** p


def pq_probe_values(Q, p, x, delta, V):
    """Values of ``(u^T Q u)^p`` at ``u = x +/- delta * V[:, i]``."""
    Vt = np.asarray(V).T
    return _pq_values(Q, p, x + delta * Vt), _pq_values(Q, p, x - delta * Vt)


def pq_estimates(Q, p, x, delta, Vs):
    """Central-difference estimates for a stack of frames ``Vs`` (m, n, k)."""
    Vs = np.asarray(Vs)
    n, k = Vs.shape[1], Vs.shape[2]
    Vt = np.swapaxes(Vs, 1, 2)
    diff = _pq_values(Q, p, x + delta * Vt) - _pq_values(Q, p, x - delta * Vt)
    return (n / (2.0 * delta * k)) * np.einsum("mik,mk->mi", Vs, diff)


def _pq_grad(Q, p, x):
    Qx = Q @ x
    s = max(float(x @ Qx), 0.0)
    if s == 0.0:
        if p > 0.5:
            return np.zeros_like(x), s
        return None, s
    return (2.0 * p * s ** (p - 1.0)) * Qx, s


def szgd_pq(Q, p, x0, eta, deltas, G, x_limit, radius):
    """SZGD on ``(x^T Q x)^p`` with frames built from the Gaussians ``G``.

    Returns ``(status, steps, f_values, step_sq, dists, iterates)`` where the
    arrays hold ``steps + 1`` (or ``steps``) entries.
    """
    Q = np.asarray(Q, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    T = len(deltas)
    n, k = G.shape[1], G.shape[2]
    f_values = np.empty(T + 1)
    step_sq = np.empty(T)
    dists = np.empty(T + 1)
    iterates = np.empty((T + 1, n))
    f_values[0] = _pq_values(Q, p, x)
    dists[0] = np.linalg.norm(x - x_limit)
    iterates[0] = x
    scale = n / (2.0 * k)
    frames = stiefel_frames(G)
    for t in range(T):
        V = frames[t]
        d = deltas[t]
        fp, fm = pq_probe_values(Q, p, x, d, V)
        g = (scale / d) * (V @ (fp - fm))
        x_new = x - eta * g
        fx = _pq_values(Q, p, x_new)
        if not (np.all(np.isfinite(x_new)) and np.isfinite(fx)):
            return STATUS_NONFINITE, t, f_values[: t + 1], step_sq[:t], dists[: t + 1], iterates[: t + 1]
        dx = x_new - x
        step_sq[t] = dx @ dx
        x = x_new
        f_values[t + 1] = fx
        dists[t + 1] = np.linalg.norm(x - x_limit)
        iterates[t + 1] = x
        if np.linalg.norm(x) > radius:
            return STATUS_DIVERGED, t + 1, f_values[: t + 2], step_sq[: t + 1], dists[: t + 2], iterates[: t + 2]
    return STATUS_OK, T, f_values, step_sq, dists, iterates


def gd_pq(Q, p, x0, eta, T, x_limit, radius):
    """Gradient descent on ``(x^T Q x)^p`` with the analytic gradient."""
    Q = np.asarray(Q, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    n = x.shape[0]
    f_values = np.empty(T + 1)
    step_sq = np.empty(T)
    dists = np.empty(T + 1)
    iterates = np.empty((T + 1, n))
    f_values[0] = _pq_values(Q, p, x)
    dists[0] = np.linalg.norm(x - x_limit)
    iterates[0] = x
    for t in range(T):
        g, _ = _pq_grad(Q, p, x)
        if g is None:
            return STATUS_DOMAIN, t, f_values[: t + 1], step_sq[:t], dists[: t + 1], iterates[: t + 1]
        x_new = x - eta * g
        fx = _pq_values(Q, p, x_new)
        if not (np.all(np.isfinite(x_new)) and np.isfinite(fx)):
            return STATUS_NONFINITE, t, f_values[: t + 1], step_sq[:t], dists[: t + 1], iterates[: t + 1]
        dx = x_new - x
        step_sq[t] = dx @ dx
        x = x_new
        f_values[t + 1] = fx
        dists[t + 1] = np.linalg.norm(x - x_limit)
        iterates[t + 1] = x
        if np.linalg.norm(x) > radius:
            return STATUS_DIVERGED, t + 1, f_values[: t + 2], step_sq[: t + 1], dists[: t + 2], iterates[: t + 2]
    return STATUS_OK, T, f_values, step_sq, dists, iterates
