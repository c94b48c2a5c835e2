"""Joint feature/side-information kernels and Gram-matrix construction.

The side-information kernel evaluates, for two joint points (x, s), the
inner product of their expansions into the monomial family

    (1, x_1..x_ax) x (1, s_1..s_as)

i.e. the constant, every x_i, every s_j, and every cross product x_i*s_j,
but no squares and no x_i*x_j or s_i*s_j pairings.  Three equivalent
evaluation routes are provided:

* ``phi``  -- expand every point into the monomial vector once, up front,
  then take plain inner products (storage grows to (a_x+1)*(a_s+1)).
* ``kphi`` -- evaluate the quadratic-size monomial sum inside every kernel
  call; nothing is cached, so each pair pays the full expansion cost.
* ``kq``   -- a linear-cost identity built from three quadratic kernels:
  K = ((<u,v>+1)^2 - <x,x'>^2 - <s,s'>^2 + 1) / 2 with u,v the
  concatenations; the expansion is never materialized.

All three agree to ~1e-9 relative in double precision; they differ only in
cost, which is exactly what the timing harness measures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

__all__ = [
    "DSIL_FORMS",
    "JointPoint",
    "JointArray",
    "KernelSpec",
    "phi_expand",
    "phi_expand_matrix",
    "quadratic_kernel",
    "dsil_kernel",
    "gram_matrix",
    "cross_gram",
]

DSIL_FORMS = ("phi", "kphi", "kq")


@dataclass(frozen=True)
class JointPoint:
    """One (instance features, target side information) pair."""

    x: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.float64).ravel())
        object.__setattr__(self, "s", np.asarray(self.s, dtype=np.float64).ravel())
        if self.x.size < 1 or self.s.size < 1:
            raise ValueError("joint point needs non-empty x and s")


class JointArray:
    """Row-aligned batches of joint points: x (n, a_x) and s (n, a_s)."""

    def __init__(self, x: np.ndarray, s: np.ndarray):
        x = np.ascontiguousarray(x, dtype=np.float64)
        s = np.ascontiguousarray(s, dtype=np.float64)
        if x.ndim != 2 or s.ndim != 2:
            raise ValueError("JointArray expects 2-D x and s")
        if x.shape[0] != s.shape[0]:
            raise ValueError(f"row mismatch: x has {x.shape[0]} rows, s has {s.shape[0]}")
        self.x = x
        self.s = s

    @property
    def a_x(self) -> int:
        return self.x.shape[1]

    @property
    def a_s(self) -> int:
        return self.s.shape[1]

    def __len__(self) -> int:
        return self.x.shape[0]

    def row(self, i: int) -> JointPoint:
        return JointPoint(self.x[i], self.s[i])

    def take(self, idx) -> "JointArray":
        idx = np.asarray(idx, dtype=np.intp)
        return JointArray(self.x[idx], self.s[idx])

    @staticmethod
    def from_points(points: Sequence[JointPoint]) -> "JointArray":
        if len(points) == 0:
            raise ValueError("empty point list")
        ax = points[0].x.size
        as_ = points[0].s.size
        for p in points:
            if p.x.size != ax or p.s.size != as_:
                raise ValueError("inhomogeneous joint-point dimensions")
        return JointArray(
            np.vstack([p.x for p in points]), np.vstack([p.s for p in points])
        )


@dataclass(frozen=True)
class KernelSpec:
    """Closed enumeration of the supported kernels.

    ``kind`` is one of ``linear``, ``quadratic`` (with offset >= 0), or
    ``dsil`` with one of the three formulations above.  Keeping this a
    closed set (rather than arbitrary callables) keeps the timing harness
    honest about which code path runs.
    """

    kind: str
    offset: float = 0.0
    form: str = "kq"

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic", "dsil"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "quadratic" and self.offset < 0:
            raise ValueError("quadratic kernel offset must be >= 0")
        if self.kind == "dsil" and self.form not in DSIL_FORMS:
            raise ValueError(f"unknown dsil formulation {self.form!r}")

    @staticmethod
    def linear() -> "KernelSpec":
        return KernelSpec(kind="linear")

    @staticmethod
    def quadratic(offset: float = 1.0) -> "KernelSpec":
        return KernelSpec(kind="quadratic", offset=float(offset))

    @staticmethod
    def dsil(form: str = "kq") -> "KernelSpec":
        return KernelSpec(kind="dsil", form=form)

    @property
    def is_joint(self) -> bool:
        return self.kind == "dsil"

    def label(self) -> str:
        if self.kind == "linear":
            return "linear"
        if self.kind == "quadratic":
            return f"quadratic(c={self.offset:g})"
        return f"dsil[{self.form}]"


def phi_expand(p: JointPoint) -> np.ndarray:
    """Monomial expansion of one joint point.

    Component order is fixed: block j (j = 0..a_s, with s_0 = 1) holds
    (s_j, x_1*s_j, ..., x_ax*s_j); block 0 is therefore (1, x_1, ..., x_ax).
    Length is (a_x+1)*(a_s+1) and the first component is always 1.
    """
    xa = np.concatenate(([1.0], p.x))
    sa = np.concatenate(([1.0], p.s))
    return np.outer(sa, xa).ravel()


def phi_expand_matrix(pts: JointArray) -> np.ndarray:
    """Row-wise monomial expansion: (n, (a_x+1)*(a_s+1))."""
    n = len(pts)
    xa = np.hstack([np.ones((n, 1)), pts.x])
    sa = np.hstack([np.ones((n, 1)), pts.s])
    return np.einsum("nj,ni->nji", sa, xa).reshape(n, -1)


def quadratic_kernel(u: np.ndarray, v: np.ndarray, c: float) -> float:
    """(<u, v> + c)^2, linear cost in the vector length."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    return float((u @ v + c) ** 2)


@njit(cache=True)
def _kphi_pair(x1, s1, x2, s2):
    # Quadratic-size monomial sum, evaluated term by term per call: the
    # cross block multiplies out every (x_i*s_j) monomial for both points.
    acc = 1.0
    for i in range(x1.shape[0]):
        acc += x1[i] * x2[i]
    for j in range(s1.shape[0]):
        acc += s1[j] * s2[j]
    for j in range(s1.shape[0]):
        for i in range(x1.shape[0]):
            acc += (x1[i] * s1[j]) * (x2[i] * s2[j])
    return acc


@njit(cache=True)
def _kphi_gram_upper(X, S, out):
    n = X.shape[0]
    for i in range(n):
        for j in range(i, n):
            out[i, j] = _kphi_pair(X[i], S[i], X[j], S[j])


@njit(cache=True)
def _kphi_cross(XA, SA, XB, SB, out):
    for i in range(XA.shape[0]):
        for j in range(XB.shape[0]):
            out[i, j] = _kphi_pair(XA[i], SA[i], XB[j], SB[j])


def _check_joint_pair(p1: JointPoint, p2: JointPoint) -> None:
    if p1.x.size != p2.x.size or p1.s.size != p2.s.size:
        raise ValueError(
            f"dimension mismatch: ({p1.x.size},{p1.s.size}) vs ({p2.x.size},{p2.s.size})"
        )


def dsil_kernel(p1: JointPoint, p2: JointPoint, form: str = "kq") -> float:
    """Side-information kernel value for one pair, by formulation."""
    _check_joint_pair(p1, p2)
    if form == "phi":
        return float(phi_expand(p1) @ phi_expand(p2))
    if form == "kphi":
        return float(_kphi_pair(p1.x, p1.s, p2.x, p2.s))
    if form == "kq":
        u = np.concatenate((p1.x, p1.s))
        v = np.concatenate((p2.x, p2.s))
        return 0.5 * (
            quadratic_kernel(u, v, 1.0)
            - quadratic_kernel(p1.x, p2.x, 0.0)
            - quadratic_kernel(p1.s, p2.s, 0.0)
            + 1.0
        )
    raise ValueError(f"unknown dsil formulation {form!r}")


def _mirror_upper(G: np.ndarray) -> np.ndarray:
    """Copy the upper triangle onto the lower one (exact symmetry)."""
    return np.triu(G) + np.triu(G, 1).T


def _as_joint(points) -> JointArray:
    if isinstance(points, JointArray):
        return points
    return JointArray.from_points(list(points))


def _as_plain(points) -> np.ndarray:
    a = np.ascontiguousarray(points, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("plain-kernel input must be a 2-D matrix")
    return a


def gram_matrix(points, spec: KernelSpec) -> np.ndarray:
    """Dense Gram matrix G[i, j] = K(points[i], points[j]).

    The result is exactly symmetric (upper triangle computed, mirrored).
    For the ``dsil`` kinds, `points` is a JointArray or a sequence of
    JointPoint; for ``linear``/``quadratic`` it is a plain (n, d) matrix.
    """
    G, _ = gram_with_expansion(points, spec)
    return G


def gram_with_expansion(points, spec: KernelSpec) -> tuple[np.ndarray, np.ndarray | None]:
    """Gram matrix plus, for the ``phi`` route only, the cached expansion."""
    if spec.kind == "linear":
        U = _as_plain(points)
        _require_rows(len(U))
        return _mirror_upper(U @ U.T), None
    if spec.kind == "quadratic":
        U = _as_plain(points)
        _require_rows(len(U))
        return _mirror_upper((U @ U.T + spec.offset) ** 2), None

    pts = _as_joint(points)
    _require_rows(len(pts))
    if spec.form == "phi":
        phi = phi_expand_matrix(pts)
        return _mirror_upper(phi @ phi.T), phi
    if spec.form == "kphi":
        G = np.zeros((len(pts), len(pts)))
        _kphi_gram_upper(pts.x, pts.s, G)
        return _mirror_upper(G), None
    Gx = _mirror_upper(pts.x @ pts.x.T)
    Gs = _mirror_upper(pts.s @ pts.s.T)
    return _mirror_upper(0.5 * ((Gx + Gs + 1.0) ** 2 - Gx**2 - Gs**2 + 1.0)), None


def _require_rows(n: int) -> None:
    if n == 0:
        raise ValueError("empty input: a Gram matrix needs at least one point")


def cross_gram(queries, support, spec: KernelSpec, support_expansion: np.ndarray | None = None) -> np.ndarray:
    """Rectangular kernel matrix K[i, j] = K(queries[i], support[j])."""
    if spec.kind == "linear":
        A, B = _as_plain(queries), _as_plain(support)
        _check_width(A, B)
        return A @ B.T
    if spec.kind == "quadratic":
        A, B = _as_plain(queries), _as_plain(support)
        _check_width(A, B)
        return (A @ B.T + spec.offset) ** 2

    qa, sa = _as_joint(queries), _as_joint(support)
    if qa.a_x != sa.a_x or qa.a_s != sa.a_s:
        raise ValueError(
            f"dimension mismatch: queries ({qa.a_x},{qa.a_s}) vs support ({sa.a_x},{sa.a_s})"
        )
    if spec.form == "phi":
        phi_s = support_expansion if support_expansion is not None else phi_expand_matrix(sa)
        return phi_expand_matrix(qa) @ phi_s.T
    if spec.form == "kphi":
        out = np.zeros((len(qa), len(sa)))
        _kphi_cross(qa.x, qa.s, sa.x, sa.s, out)
        return out
    Gx = qa.x @ sa.x.T
    Gs = qa.s @ sa.s.T
    return 0.5 * ((Gx + Gs + 1.0) ** 2 - Gx**2 - Gs**2 + 1.0)


def _check_width(A: np.ndarray, B: np.ndarray) -> None:
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]} features")
