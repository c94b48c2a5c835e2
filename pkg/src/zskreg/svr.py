"""Epsilon-insensitive support vector regression over a pluggable kernel.

The dual problem is solved by sequential pairwise optimization: at every
step the maximal-KKT-violation pair is selected (the most violating
"can-increase" and "can-decrease" directions), the two-variable subproblem
is solved in closed form, and the residual cache is updated.  The solver
is fully deterministic: no randomness, fixed scan order, first index wins
ties.

Signed dual coefficients beta_i = alpha_i - alpha*_i live in [-C, C]; the
fitted function is f(q) = sum_i beta_i * K(p_i, q) + bias.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .kernels import JointArray, KernelSpec, cross_gram, gram_with_expansion

__all__ = [
    "SvrConfig",
    "SvrModel",
    "LinearWeights",
    "ConvergenceWarning",
    "fit",
    "predict",
    "extract_linear_weights",
]


class ConvergenceWarning(UserWarning):
    """The pass cap was reached before the KKT gap dropped below tol."""


@dataclass(frozen=True)
class SvrConfig:
    """Solver hyperparameters: C, tube half-width, KKT tolerance, pass cap."""

    c: float = 1.0
    epsilon: float = 0.1
    tol: float = 1e-3
    max_passes: int = 200_000

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_passes < 1:
            raise ValueError(f"max_passes must be >= 1, got {self.max_passes}")

    def with_c(self, c: float) -> "SvrConfig":
        return replace(self, c=float(c))


@dataclass(frozen=True)
class LinearWeights:
    """Primal weights of a linear-kernel model: f(q) = w.q + b."""

    w: np.ndarray
    b: float


@njit(cache=True)
def _smo(K, y, C, eps, tol, max_passes):
    """Pairwise dual ascent on the epsilon-SVR problem.

    Returns (beta, bias, converged, iterations).  r caches y - K.beta and
    is refreshed from scratch periodically to bound drift.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    alpha_star = np.zeros(n)
    r = y.copy()
    converged = False
    it = 0
    while it < max_passes:
        # maximal violating pair: largest "push beta up" gain vs smallest
        # "push beta down" value.  side 0 = alpha, side 1 = alpha_star.
        m_val = -np.inf
        M_val = np.inf
        i1 = -1
        i2 = -1
        side1 = 0
        side2 = 0
        for i in range(n):
            va = r[i] - eps
            vs = r[i] + eps
            if alpha[i] < C and va > m_val:
                m_val = va
                i1 = i
                side1 = 0
            if alpha_star[i] > 0.0 and vs > m_val:
                m_val = vs
                i1 = i
                side1 = 1
            if alpha[i] > 0.0 and va < M_val:
                M_val = va
                i2 = i
                side2 = 0
            if alpha_star[i] < C and vs < M_val:
                M_val = vs
                i2 = i
                side2 = 1
        if i1 < 0 or i2 < 0 or m_val - M_val <= tol:
            converged = m_val - M_val <= tol
            break
        a = K[i1, i1] + K[i2, i2] - 2.0 * K[i1, i2]
        if a <= 1e-12:
            a = 1e-12
        lam = (m_val - M_val) / a
        room1 = (C - alpha[i1]) if side1 == 0 else alpha_star[i1]
        room2 = alpha[i2] if side2 == 0 else (C - alpha_star[i2])
        if lam > room1:
            lam = room1
        if lam > room2:
            lam = room2
        if lam <= 0.0:
            break
        if side1 == 0:
            alpha[i1] += lam
            if alpha[i1] > C:
                alpha[i1] = C
        else:
            alpha_star[i1] -= lam
            if alpha_star[i1] < 0.0:
                alpha_star[i1] = 0.0
        if side2 == 0:
            alpha[i2] -= lam
            if alpha[i2] < 0.0:
                alpha[i2] = 0.0
        else:
            alpha_star[i2] += lam
            if alpha_star[i2] > C:
                alpha_star[i2] = C
        for t in range(n):
            r[t] -= lam * (K[t, i1] - K[t, i2])
        it += 1
        if it % 8192 == 0:
            beta = alpha - alpha_star
            r = y - np.dot(K, beta)

    # a point never holds both directions at the optimum; shrink overlaps
    for i in range(n):
        ov = min(alpha[i], alpha_star[i])
        if ov > 0.0:
            alpha[i] -= ov
            alpha_star[i] -= ov

    beta = alpha - alpha_star
    r = y - np.dot(K, beta)
    m_val = -np.inf
    M_val = np.inf
    for i in range(n):
        va = r[i] - eps
        vs = r[i] + eps
        if alpha[i] < C and va > m_val:
            m_val = va
        if alpha_star[i] > 0.0 and vs > m_val:
            m_val = vs
        if alpha[i] > 0.0 and va < M_val:
            M_val = va
        if alpha_star[i] < C and vs < M_val:
            M_val = vs
    if np.isfinite(m_val) and np.isfinite(M_val):
        bias = 0.5 * (m_val + M_val)
    elif np.isfinite(m_val):
        bias = m_val
    elif np.isfinite(M_val):
        bias = M_val
    else:
        bias = 0.0
    return beta, bias, converged, it


class SvrModel:
    """Fitted model: support points, signed dual coefficients, bias, kernel."""

    def __init__(
        self,
        kernel: KernelSpec,
        support_points,
        dual_coeffs: np.ndarray,
        bias: float,
        converged: bool,
        n_iterations: int,
        train_dim: tuple[int, int | None],
    ):
        self.kernel = kernel
        self.support_points = support_points
        self.dual_coeffs = np.asarray(dual_coeffs, dtype=np.float64)
        self.bias = float(bias)
        self.converged = bool(converged)
        self.n_iterations = int(n_iterations)
        self.train_dim = train_dim
        # the phi route pays its expansion once, at fit time
        self._support_expansion = None
        if kernel.is_joint and kernel.form == "phi" and len(self.dual_coeffs) > 0:
            from .kernels import phi_expand_matrix

            self._support_expansion = phi_expand_matrix(self.support_points)

    @property
    def n_support(self) -> int:
        return len(self.dual_coeffs)

    def predict(self, X) -> np.ndarray:
        return predict(self, X)

    def to_dict(self) -> dict:
        d = {
            "kernel": {"kind": self.kernel.kind, "offset": self.kernel.offset, "form": self.kernel.form},
            "dual_coeffs": self.dual_coeffs.tolist(),
            "bias": self.bias,
            "converged": self.converged,
            "n_iterations": self.n_iterations,
            "train_dim": list(self.train_dim),
        }
        if self.kernel.is_joint:
            d["support_x"] = self.support_points.x.tolist()
            d["support_s"] = self.support_points.s.tolist()
        else:
            d["support"] = np.asarray(self.support_points).tolist()
        return d

    @staticmethod
    def from_dict(d: dict) -> "SvrModel":
        kernel = KernelSpec(kind=d["kernel"]["kind"], offset=d["kernel"]["offset"], form=d["kernel"]["form"])
        dim = d["train_dim"]
        if kernel.is_joint:
            support = JointArray(
                np.asarray(d["support_x"], dtype=np.float64).reshape(-1, dim[0]),
                np.asarray(d["support_s"], dtype=np.float64).reshape(-1, dim[1]),
            )
        else:
            support = np.asarray(d["support"], dtype=np.float64).reshape(-1, dim[0])
        return SvrModel(
            kernel,
            support,
            np.asarray(d["dual_coeffs"], dtype=np.float64),
            d["bias"],
            d["converged"],
            d["n_iterations"],
            (dim[0], dim[1]),
        )


def _validate_training_input(X, y: np.ndarray, kernel: KernelSpec):
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    if kernel.is_joint:
        pts = X if isinstance(X, JointArray) else JointArray.from_points(list(X))
        n = len(pts)
        finite = np.all(np.isfinite(pts.x)) and np.all(np.isfinite(pts.s))
        dim = (pts.a_x, pts.a_s)
    else:
        pts = np.ascontiguousarray(X, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError("training matrix must be 2-D")
        n = pts.shape[0]
        finite = bool(np.all(np.isfinite(pts)))
        dim = (pts.shape[1], None)
    if n != y.shape[0]:
        raise ValueError(f"rows of X ({n}) do not match y length ({y.shape[0]})")
    if not finite or not np.all(np.isfinite(y)):
        raise ValueError("non-finite value in training input")
    return pts, y, dim


def fit(X, y, kernel: KernelSpec, cfg: SvrConfig) -> SvrModel:
    """Fit an epsilon-SVR on (X, y) under the given kernel.

    Deterministic for identical inputs and config.  If the pass cap is hit
    first, a usable model is still returned, flagged via ``converged`` and
    a ConvergenceWarning.
    """
    pts, y, dim = _validate_training_input(X, y, kernel)
    G, _ = gram_with_expansion(pts, kernel)
    beta, bias, converged, iters = _smo(
        G, y, float(cfg.c), float(cfg.epsilon), float(cfg.tol), int(cfg.max_passes)
    )
    if not converged:
        warnings.warn(
            f"SVR did not reach tol={cfg.tol:g} within {cfg.max_passes} passes "
            f"(C={cfg.c:g}); returning the current iterate",
            ConvergenceWarning,
            stacklevel=2,
        )
    sv = np.flatnonzero(beta != 0.0)
    support = pts.take(sv) if kernel.is_joint else pts[sv]
    return SvrModel(kernel, support, beta[sv], bias, converged, iters, dim)


def predict(model: SvrModel, X) -> np.ndarray:
    """f(q) = sum_i beta_i K(support_i, q) + bias for each query row."""
    if model.kernel.is_joint:
        q = X if isinstance(X, JointArray) else JointArray.from_points(list(X))
        if (q.a_x, q.a_s) != model.train_dim:
            raise ValueError(
                f"dimension mismatch: model trained on (a_x={model.train_dim[0]}, "
                f"a_s={model.train_dim[1]}), got (a_x={q.a_x}, a_s={q.a_s})"
            )
        n = len(q)
    else:
        q = np.ascontiguousarray(X, dtype=np.float64)
        if q.ndim != 2 or q.shape[1] != model.train_dim[0]:
            raise ValueError(
                f"dimension mismatch: model trained on {model.train_dim[0]} features, "
                f"got {q.shape[1] if q.ndim == 2 else 'non-matrix'}"
            )
        n = q.shape[0]
    if model.n_support == 0:
        return np.full(n, model.bias)
    K = cross_gram(q, model.support_points, model.kernel, model._support_expansion)
    return K @ model.dual_coeffs + model.bias


def extract_linear_weights(model: SvrModel) -> LinearWeights:
    """Collapse a linear-kernel model to explicit primal weights."""
    if model.kernel.kind != "linear":
        raise ValueError(f"weights only exist for the linear kernel, got {model.kernel.label()}")
    d = model.train_dim[0]
    if model.n_support == 0:
        w = np.zeros(d)
    else:
        w = model.dual_coeffs @ np.asarray(model.support_points)
    return LinearWeights(w=w, b=model.bias)
