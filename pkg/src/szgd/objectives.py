"""Test objectives with analytic derivatives and Lojasiewicz metadata.

The workhorse is :class:`PowerQuadratic`, ``f(x) = (x^T Q x)^p``, which covers
the two experimental test functions (``p = 3/4`` and ``p = 1/4`` on a random
PSD ``Q``), plain quadratics (``p = 1``), ``|x|`` (``Q = 1, p = 1/2``),
``sqrt|x|`` (``p = 1/4``) and ``||x||^3`` (``Q = I, p = 3/2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, UnsupportedObjectiveError
from .rng import RngStream
from .stiefel import sample_stiefel

# Fixed stream for the empirical Lojasiewicz constant so that it is a pure
# function of the objective.
_CERTIFICATE_SEED = 0x5A6D
CERTIFICATE_SAMPLES = 10_000


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Symmetric PSD matrix stored together with its spectral decomposition."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=np.float64).reshape(-1)
        U = np.array(self.eigenvectors, dtype=np.float64)
        if U.shape != (lam.size, lam.size):
            raise ValueError("eigenvector matrix must be n x n")
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite and nonnegative")
        if lam.size and np.abs(U.T @ U - np.eye(lam.size)).max() > 1e-8:
            raise ValueError("eigenvectors must be orthonormal")
        Q = (U * lam) @ U.T
        Q = 0.5 * (Q + Q.T)
        for a in (lam, U, Q):
            a.flags.writeable = False
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", U)
        object.__setattr__(self, "_matrix", Q)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues.min())

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues.max())

    @property
    def is_positive_definite(self) -> bool:
        return self.lambda_min > 0.0

    def isotropic_scale(self) -> float | None:
        """Return ``c`` if ``Q = c I`` (to rounding), else ``None``."""
        lam = self.eigenvalues
        c = float(lam.mean())
        if np.all(np.abs(lam - c) <= 1e-14 * max(c, 1e-300)):
            return c
        return None

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> "QuadraticForm":
        return cls(np.full(n, float(scale)), np.eye(n))

    @classmethod
    def from_matrix(cls, Q) -> "QuadraticForm":
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if np.abs(Q - Q.T).max() > 1e-12 * max(1.0, np.abs(Q).max()):
            raise ValueError("matrix is not symmetric")
        lam, U = np.linalg.eigh(0.5 * (Q + Q.T))
        return cls(np.clip(lam, 0.0, None), U)

    def to_text(self) -> str:
        """Serialize as ``key = value`` lines with 17 significant digits.

        Layout: ``dimension``, then ``eigenvalues`` (space separated), then
        ``eigenvectors`` as ``n*n`` numbers in row-major order.
        """
        fmt = lambda a: " ".join(f"{v:.17g}" for v in np.ravel(a))
        return (f"dimension = {self.n}\n"
                f"eigenvalues = {fmt(self.eigenvalues)}\n"
                f"eigenvectors = {fmt(self.eigenvectors)}\n")

    @classmethod
    def from_text(cls, text: str) -> "QuadraticForm":
        fields = {}
        for line in text.splitlines():
            if "=" in line:
                key, _, value = line.partition("=")
                fields[key.strip()] = value.strip()
        n = int(fields["dimension"])
        lam = np.array(fields["eigenvalues"].split(), dtype=float)
        U = np.array(fields["eigenvectors"].split(), dtype=float).reshape(n, n)
        return cls(lam, U)


def make_random_psd(n: int, mean: float, rng) -> QuadraticForm:
    """Random PSD matrix with i.i.d. exponential eigenvalues of the given mean
    and Haar-random eigenvectors."""
    if n < 1:
        raise ValueError("n must be positive")
    if not mean > 0:
        raise ValueError("eigenvalue mean must be positive")
    lam = rng.exponential(mean, n)
    U = sample_stiefel(n, n, rng).columns
    return QuadraticForm(lam, U)


def make_conditioned_pd(n: int, low: float, high: float, rng) -> QuadraticForm:
    """Random positive-definite matrix with eigenvalues uniform on ``[low, high]``.

    Bounds the condition number by ``high / low``, which keeps the transient
    before power-law asymptotics short for power-quadratics with ``p > 1``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < low <= high:
        raise ValueError("need 0 < low <= high")
    lam = rng.uniform(low, high, n)
    U = sample_stiefel(n, n, rng).columns
    return QuadraticForm(lam, U)


def theta_of_power(p: float) -> float:
    """Lojasiewicz exponent of ``(x^T Q x)^p`` at its minimizer (PD ``Q``).

    Near zero ``f ~ r^(2p)`` and ``|grad f| ~ r^(2p-1)``, so the smallest
    admissible exponent is ``1 - 1 / (2p)``. Defined only for ``p > 1/2``.
    """
    if not p > 0.5:
        raise DomainError(f"no Lojasiewicz exponent in (0, 1) for power p={p} <= 1/2")
    theta = 1.0 - 1.0 / (2.0 * p)
    assert 0.0 < theta < 1.0
    return theta


class Objective:
    """Evaluation, gradient and subgradient oracles plus metadata.

    Parameters
    ----------
    name : str
    dimension : int
    func : callable
        ``x -> f(x)`` for a 1-d array ``x``.
    grad, subgrad : callable, optional
        Analytic gradient and a subgradient selection.
    smooth_L : float, optional
        Lipschitz constant of the gradient (on ``loja_radius`` of the
        minimizer when the function is only locally smooth).
    loja_theta, loja_radius, loja_kappa : float, optional
        Lojasiewicz exponent, certificate radius and empirical constant.
    minimizer, min_value : optional
        Known global minimizer and minimum value.
    smooth : bool
        False when the function is not differentiable everywhere.
    batch_func : callable, optional
        Vectorized ``X -> f`` over the rows of ``X``.
    """

    def __init__(
        self,
        name: str,
        dimension: int,
        func: Callable[[np.ndarray], float],
        grad: Callable[[np.ndarray], np.ndarray] | None = None,
        subgrad: Callable[[np.ndarray], np.ndarray] | None = None,
        *,
        smooth_L: float | None = None,
        loja_theta: float | None = None,
        loja_radius: float = 1.0,
        loja_kappa: float | None = None,
        minimizer=None,
        min_value: float | None = None,
        smooth: bool = True,
        batch_func: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        self.name = name
        self.dimension = int(dimension)
        self._func = func
        self._grad = grad
        self._subgrad = subgrad
        self._batch = batch_func
        self.smooth_L = smooth_L
        self.loja_theta = loja_theta
        self.loja_radius = float(loja_radius)
        self.loja_kappa = loja_kappa
        self.minimizer = None if minimizer is None else np.asarray(minimizer, dtype=float)
        self.min_value = min_value
        self.smooth = smooth

    def __repr__(self) -> str:
        return f"<Objective {self.name} n={self.dimension}>"

    def __call__(self, x) -> float:
        return float(self._func(np.asarray(x, dtype=float)))

    def values(self, X) -> np.ndarray:
        """Evaluate at every row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._batch is not None:
            return np.asarray(self._batch(X), dtype=float)
        return np.array([self._func(row) for row in X], dtype=float)

    @property
    def has_grad(self) -> bool:
        return self._grad is not None

    def gradient(self, x) -> np.ndarray:
        if self._grad is None:
            raise UnsupportedObjectiveError(f"{self.name} has no analytic gradient")
        return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)

    def gradients(self, X) -> np.ndarray:
        """Gradient at every row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.gradient(row) for row in X])

    def subgradient(self, x) -> np.ndarray:
        if self._subgrad is not None:
            return np.asarray(self._subgrad(np.asarray(x, dtype=float)), dtype=float)
        if self._grad is not None and self.smooth:
            return self.gradient(x)
        raise UnsupportedObjectiveError(f"{self.name} has no subgradient oracle")


class PowerQuadratic(Objective):
    """``f(x) = (x^T Q x)^p`` for a PSD quadratic form ``Q`` and ``p > 0``."""

    def __init__(self, form: QuadraticForm, p: float, *, name: str | None = None,
                 loja_radius: float = 1.0):
        if not p > 0:
            raise ValueError("power must be positive")
        self.form = form
        self.p = float(p)
        Q = form.matrix
        self.Q = Q
        n = form.n
        smooth = self.p > 0.5
        theta = theta_of_power(self.p) if self.p > 0.5 and form.is_positive_definite else None
        super().__init__(
            name or f"power_quadratic(p={self.p:g}, n={n})",
            n,
            self._value,
            self._gradient,
            self._subgradient,
            smooth_L=self.local_smoothness(loja_radius),
            loja_theta=theta,
            loja_radius=loja_radius,
            minimizer=np.zeros(n),
            min_value=0.0,
            smooth=smooth,
            batch_func=self._values,
        )
        if theta is not None:
            self.loja_kappa = lojasiewicz_constant(self, theta)

    def _s(self, x) -> float:
        return max(float(x @ self.Q @ x), 0.0)

    def _value(self, x) -> float:
        return self._s(x) ** self.p

    def _values(self, X) -> np.ndarray:
        s = np.einsum("ij,jk,ik->i", X, self.Q, X)
        return np.maximum(s, 0.0) ** self.p

    def _gradient(self, x) -> np.ndarray:
        Qx = self.Q @ x
        s = max(float(x @ Qx), 0.0)
        if s == 0.0:
            if self.p > 0.5:
                return np.zeros_like(x)
            raise DomainError(f"{self.name} is not differentiable where x^T Q x = 0")
        return (2.0 * self.p * s ** (self.p - 1.0)) * Qx

    def gradients(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        QX = X @ self.Q
        s = np.maximum(np.einsum("ij,ij->i", X, QX), 0.0)
        if np.any(s == 0.0) and self.p <= 0.5:
            raise DomainError(f"{self.name} is not differentiable where x^T Q x = 0")
        with np.errstate(divide="ignore"):
            coef = np.where(s > 0.0, 2.0 * self.p * s ** (self.p - 1.0), 0.0)
        return coef[:, None] * QX

    def _subgradient(self, x) -> np.ndarray:
        if self._s(x) == 0.0:
            return np.zeros_like(x)
        return self._gradient(x)

    def local_smoothness(self, radius: float) -> float | None:
        """Lipschitz constant of the gradient on the ball ``||x|| <= radius``.

        Exact for ``p = 1``; for ``p > 1`` it bounds the Hessian norm,
        ``2p(2p-1) lambda_max^p radius^(2p-2)``. ``None`` when ``p < 1``
        (the Hessian is unbounded near the minimizer).
        """
        lmax = self.form.lambda_max
        if self.p == 1.0:
            return 2.0 * lmax
        if self.p > 1.0:
            return 2.0 * self.p * (2.0 * self.p - 1.0) * lmax**self.p * radius ** (2.0 * self.p - 2.0)
        return None

    def lipschitz_pairs_ok(self, pairs: int, rng) -> bool:
        """Check the stored ``smooth_L`` on random pairs inside ``loja_radius``."""
        if self.smooth_L is None:
            return True
        X = _uniform_ball(self.dimension, self.loja_radius, pairs, rng)
        Y = _uniform_ball(self.dimension, self.loja_radius, pairs, rng)
        for x, y in zip(X, Y):
            lhs = np.linalg.norm(self._gradient(x) - self._gradient(y))
            if lhs > self.smooth_L * np.linalg.norm(x - y) * (1 + 1e-12):
                return False
        return True


def power_quadratic(q: QuadraticForm, p: float, *, name: str | None = None,
                    loja_radius: float = 1.0) -> PowerQuadratic:
    """Build ``(x^T Q x)^p``; see :class:`PowerQuadratic`."""
    return PowerQuadratic(q, p, name=name, loja_radius=loja_radius)


def _uniform_ball(n: int, radius: float, count: int, rng) -> np.ndarray:
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(0.0, 1.0, count) ** (1.0 / n)
    return g * r[:, None]


def lojasiewicz_constant(objective: Objective, theta: float, samples: int = CERTIFICATE_SAMPLES,
                         rng=None) -> float:
    """Empirical ``max |f(x) - f*|^theta / ||grad f(x)||`` over the certificate ball.

    Points are drawn uniformly in the ball of radius ``loja_radius`` around
    the minimizer; the minimizer itself is excluded.
    """
    if objective.minimizer is None or objective.min_value is None:
        raise UnsupportedObjectiveError("certificate needs a known minimizer")
    rng = RngStream(_CERTIFICATE_SEED) if rng is None else rng
    X = objective.minimizer + _uniform_ball(objective.dimension, objective.loja_radius, samples, rng)
    gap = np.abs(objective.values(X) - objective.min_value)
    keep = gap > 0.0
    gn = np.linalg.norm(objective.gradients(X[keep]), axis=1)
    return float((gap[keep] ** theta / gn).max()) if keep.any() else 0.0


def subgrad_radial(objective: Objective, x) -> np.ndarray:
    """A subgradient of a registered radial objective.

    Equals the gradient where ``f`` is differentiable; at the minimizer of a
    nonsmooth radial form it returns zero, which lies in the limiting
    subdifferential there.
    """
    if not isinstance(objective, PowerQuadratic):
        raise UnsupportedObjectiveError(f"{objective.name} is not a registered radial form")
    return objective.subgradient(x)


def linear(g) -> Objective:
    g = np.asarray(g, dtype=float)
    return Objective(
        "linear", g.size, lambda x: float(g @ x), lambda x: g.copy(),
        smooth_L=None, batch_func=lambda X: X @ g,
    )


def constant(n: int, value: float = 0.0) -> Objective:
    return Objective(
        "constant", n, lambda x: value, lambda x: np.zeros(n),
        batch_func=lambda X: np.full(X.shape[0], float(value)),
    )


def norm_cubed(n: int) -> PowerQuadratic:
    """``||x||^3``; L-smooth on bounded sets with local constant ``6 R``."""
    return PowerQuadratic(QuadraticForm.identity(n), 1.5, name=f"norm_cubed(n={n})")


def abs_value() -> PowerQuadratic:
    return PowerQuadratic(QuadraticForm.identity(1), 0.5, name="abs")


def sqrt_abs() -> PowerQuadratic:
    return PowerQuadratic(QuadraticForm.identity(1), 0.25, name="sqrt_abs")


def scalar_quadratic(lam: float) -> PowerQuadratic:
    """``(lam / 2) x^2`` in one dimension."""
    return PowerQuadratic(QuadraticForm(np.array([lam / 2.0]), np.eye(1)), 1.0,
                          name=f"half_quadratic(lam={lam:g})")


def benchmark_function(which: str, q: QuadraticForm) -> PowerQuadratic:
    """The experimental test functions: ``'F1'`` is p=3/4 and ``'F2'`` is p=1/4."""
    powers = {"F1": 0.75, "F2": 0.25}
    try:
        p = powers[which.upper()]
    except KeyError:
        raise ValueError(f"unknown test function {which!r}") from None
    return PowerQuadratic(q, p, name=which.upper())


def scale_law_error(objective: PowerQuadratic, x, c: float) -> float:
    """Relative error of ``f(c x) = c^(2p) f(x)``."""
    lhs = objective(c * np.asarray(x))
    rhs = c ** (2.0 * objective.p) * objective(x)
    return abs(lhs - rhs) / max(abs(rhs), math.ulp(1.0))
