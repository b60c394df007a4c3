"""One-class SVM (nu parameterization) trained by a working-set solver.

Dual problem: minimize (1/2) a^T Q a subject to 0 <= a_i <= 1/(nu*n) and
sum(a) = 1, with Q the kernel Gram matrix.  The solver repeatedly picks the
maximally violating pair (the not-at-upper-bound point with the smallest
gradient and the not-at-lower-bound point with the largest) and moves mass
between them; the decision function is f(x) = sum_i a_i K(x_i, x) - rho
with inliers at f(x) >= 0.

nu bounds both the training outlier fraction (from above, asymptotically)
and the support vector fraction (from below).  Binary API-call vectors are
the intended inputs, but nothing here assumes binary features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError

DEFAULT_TOL = 1e-7
MAX_PAIR_STEPS = 200_000


@dataclass
class OcSvmModel:
    kernel: str
    gamma: float | None
    nu: float
    support_vectors: np.ndarray
    alphas: np.ndarray
    rho: float
    n_train: int
    kkt_gap: float


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for every row pair."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    a2 = (A * A).sum(axis=1)[:, None]
    b2 = (B * B).sum(axis=1)[None, :]
    sq = np.maximum(a2 + b2 - 2.0 * (A @ B.T), 0.0)
    return np.exp(-gamma * sq)


def linear_kernel(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    return A @ B.T


def _gram(X: np.ndarray, kernel: str, gamma: float | None) -> np.ndarray:
    if kernel == "rbf":
        return rbf_kernel(X, X, gamma)
    if kernel == "linear":
        return linear_kernel(X, X)
    raise ConfigError(f"unknown kernel {kernel!r}; use 'rbf' or 'linear'")


def ocsvm_fit(X: np.ndarray, nu: float, kernel: str = "rbf",
              gamma: float | None = None, tol: float = DEFAULT_TOL,
              max_steps: int = MAX_PAIR_STEPS) -> OcSvmModel:
    """Solve the dual from the uniform feasible point a_i = 1/n.

    gamma defaults to 1/n_features for the rbf kernel.  Stops when the KKT
    gap falls below tol or after max_steps pair updates, whichever comes
    first; the final gap is recorded on the model either way.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n = X.shape[0]
    if not 0.0 < nu <= 1.0:
        raise ConfigError(f"nu must be in (0, 1], got {nu}")
    if n < 2:
        raise NumericError("one-class SVM needs at least 2 training points")
    if kernel == "rbf" and gamma is None:
        gamma = 1.0 / X.shape[1]
    Q = _gram(X, kernel, gamma)
    C = 1.0 / (nu * n)
    # uniform start keeps exchangeable points exchangeable in the solution
    alpha = np.full(n, 1.0 / n, dtype=np.float64)
    grad = Q @ alpha
    bound_eps = C * 1e-12
    gap = np.inf
    for _ in range(max_steps):
        can_up = alpha < C - bound_eps
        can_down = alpha > bound_eps
        if not can_up.any() or not can_down.any():
            gap = 0.0
            break
        g_up = np.where(can_up, grad, np.inf)
        g_down = np.where(can_down, grad, -np.inf)
        i = int(np.argmin(g_up))
        j = int(np.argmax(g_down))
        gap = float(grad[j] - grad[i])
        if gap < tol:
            break
        denom = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
        if denom > 1e-300:
            delta = gap / denom
        else:
            delta = np.inf
        delta = min(delta, C - alpha[i], alpha[j])
        alpha[i] += delta
        alpha[j] -= delta
        grad += delta * (Q[:, i] - Q[:, j])

    interior = (alpha > bound_eps) & (alpha < C - bound_eps)
    if interior.any():
        rho = float(grad[interior].mean())
    else:
        at_upper = grad[alpha >= C - bound_eps]
        at_lower = grad[alpha <= bound_eps]
        hi = float(at_upper.max()) if at_upper.size else -np.inf
        lo = float(at_lower.min()) if at_lower.size else np.inf
        if np.isinf(hi) and np.isinf(lo):
            raise NumericError("cannot recover rho: empty alpha partition")
        if np.isinf(hi):
            rho = lo
        elif np.isinf(lo):
            rho = hi
        else:
            rho = (hi + lo) / 2.0
    sv_mask = alpha > bound_eps
    return OcSvmModel(kernel=kernel, gamma=gamma, nu=nu,
                      support_vectors=X[sv_mask].copy(),
                      alphas=alpha[sv_mask].copy(), rho=rho, n_train=n,
                      kkt_gap=gap)


def ocsvm_decision(model: OcSvmModel, X: np.ndarray) -> np.ndarray:
    """f(x) = sum_i a_i K(sv_i, x) - rho for each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if model.kernel == "rbf":
        K = rbf_kernel(model.support_vectors, X, model.gamma)
    else:
        K = linear_kernel(model.support_vectors, X)
    return model.alphas @ K - model.rho


def ocsvm_predict(model: OcSvmModel, X: np.ndarray) -> np.ndarray:
    """True for inliers (f >= 0), False for outliers."""
    return ocsvm_decision(model, X) >= 0.0


def dual_objective(model: OcSvmModel) -> float:
    """(1/2) a^T Q a restricted to the stored support vectors."""
    Q = _gram(model.support_vectors, model.kernel, model.gamma)
    return 0.5 * float(model.alphas @ Q @ model.alphas)
