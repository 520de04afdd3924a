"""Proximal operator of power-quadratic objectives.

``prox(x) = argmin_z f(z) + |z - x|^2 / (2 eta)`` for ``f(z) = (z^T Q z)^p``.
Two reductions to a scalar problem are used:

* ``Q = c I``: the minimizer is ``z = r x / |x|`` with ``r`` minimizing
  ``c^p r^(2p) + (r - |x|)^2 / (2 eta)`` on ``[0, |x|]``. Closed forms exist
  for ``p = 1/2`` (group soft threshold) and ``p = 1``; otherwise the
  stationarity equation is bracketed and solved, with the endpoint ``r = 0``
  compared explicitly when ``p < 1/2`` (the scalar problem is then
  concave-convex).
* general ``Q`` with ``p >= 1/2`` (convex case): stationary points have the
  form ``z(mu) = (I + eta mu Q)^-1 x`` with ``mu = 2p s(z)^(p-1)``, a
  monotone scalar equation in ``mu`` solved in the eigenbasis of ``Q``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InnerSolverError, UnsupportedObjectiveError
from .objectives import Objective, PowerQuadratic


@dataclass(frozen=True)
class ProxConfig:
    eta: float
    inner_tol: float = 1e-12
    inner_max_iters: int = 200

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.inner_tol > 0:
            raise ValueError("inner_tol must be positive")
        if self.inner_max_iters < 1:
            raise ValueError("inner_max_iters must be positive")


@dataclass(frozen=True)
class ProxResult:
    """Proximal point, the implied subgradient ``(x - x+) / eta`` and the
    number of inner solver iterations."""

    x: np.ndarray
    subgradient: np.ndarray
    iterations: int
    certificate_gap: float


def _root(fun, lo, hi, cfg: ProxConfig):
    try:
        r, info = brentq(fun, lo, hi, xtol=cfg.inner_tol * max(1.0, abs(hi)) * 1e-3,
                         rtol=4 * np.finfo(float).eps, maxiter=cfg.inner_max_iters,
                         full_output=True, disp=False)
    except ValueError as exc:
        raise InnerSolverError(f"inner solver failed to bracket a root: {exc}",
                               lo=lo, hi=hi, f_lo=fun(lo), f_hi=fun(hi)) from exc
    if not info.converged:
        raise InnerSolverError("inner solver did not converge", lo=lo, hi=hi,
                               iterations=info.iterations, flag=info.flag)
    return r, info.iterations


def _radial(c: float, p: float, a: float, cfg: ProxConfig) -> tuple[float, int]:
    """Minimize ``c^p r^(2p) + (r - a)^2 / (2 eta)`` over ``r`` in ``[0, a]``."""
    eta = cfg.eta
    cp = c**p
    if p == 0.5:
        return max(0.0, a - eta * np.sqrt(c)), 0
    if p == 1.0:
        return a / (1.0 + 2.0 * eta * c), 0

    def phi(r):
        return cp * r ** (2 * p) + (r - a) ** 2 / (2 * eta)

    def dphi(r):
        return 2 * p * cp * r ** (2 * p - 1) + (r - a) / eta

    if p > 0.5:
        return _root(dphi, 0.0, a, cfg)
    # p < 1/2: concave on [0, rc], convex on [rc, inf)
    rc = (eta * 2 * p * (1 - 2 * p) * cp) ** (1.0 / (2 - 2 * p))
    if rc >= a:
        candidates, iters = [0.0, a], 0
    elif dphi(rc) >= 0.0:
        candidates, iters = [0.0], 0
    else:
        r_star, iters = _root(dphi, rc, a, cfg)
        candidates = [0.0, r_star]
    return min(candidates, key=phi), iters


def _general(f: PowerQuadratic, x: np.ndarray, cfg: ProxConfig) -> tuple[np.ndarray, int]:
    p, eta = f.p, cfg.eta
    lam = f.form.eigenvalues
    U = f.form.eigenvectors
    c = U.T @ x
    pos = lam > 0.0
    s0 = float(np.sum(lam * c * c))
    if s0 == 0.0:
        return x.copy(), 0

    def z_of(mu):
        return U @ (c / (1.0 + eta * mu * lam))

    def s_of(mu):
        return float(np.sum(lam * (c / (1.0 + eta * mu * lam)) ** 2))

    if p == 1.0:
        return z_of(2.0), 0
    if p == 0.5:
        if np.sum(c[pos] ** 2 / lam[pos]) <= eta**2:
            return U @ np.where(pos, 0.0, c), 0

        def h(mu):
            return mu * np.sqrt(s_of(mu)) - 1.0
    else:
        def h(mu):
            return mu - 2.0 * p * s_of(mu) ** (p - 1.0)

    hi = 1.0
    for _ in range(2100):
        if h(hi) > 0.0:
            break
        hi *= 2.0
    else:
        raise InnerSolverError("could not bracket the proximal multiplier", hi=hi)
    mu, iters = _root(h, 0.0, hi, cfg)
    return z_of(mu), iters


def _safe_norm(x: np.ndarray) -> float:
    # np.linalg.norm squares first and underflows for |x| below ~1e-154
    m = float(np.abs(x).max()) if x.size else 0.0
    return 0.0 if m == 0.0 else m * float(np.linalg.norm(x / m))


def prox_solve(f: Objective, x, cfg: ProxConfig) -> ProxResult:
    """Solve one proximal subproblem and verify the decrease certificate
    ``f(x+) + |x+ - x|^2 / (2 eta) <= f(x) + inner_tol``."""
    if not isinstance(f, PowerQuadratic):
        raise UnsupportedObjectiveError(f"no proximal solver registered for {f.name}")
    x = np.asarray(x, dtype=float)
    scale = f.form.isotropic_scale()
    if scale is not None:
        a = _safe_norm(x)
        if a == 0.0 or scale == 0.0:
            z, iters = x.copy(), 0
        else:
            r, iters = _radial(scale, f.p, a, cfg)
            z = x * (r / a)
    elif f.p >= 0.5:
        z, iters = _general(f, x, cfg)
    else:
        raise UnsupportedObjectiveError(
            f"proximal step for p={f.p} < 1/2 needs an isotropic quadratic form")
    gap = f(z) + float((z - x) @ (z - x)) / (2 * cfg.eta) - f(x)
    if gap > cfg.inner_tol:
        raise InnerSolverError("proximal step failed the decrease certificate", gap=gap)
    return ProxResult(z, (x - z) / cfg.eta, int(iters), gap)
