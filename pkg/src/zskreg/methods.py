"""Zero-shot regression methods behind one fit/predict contract.

Four families share the contract "fit on observed instances plus observed
side information, predict for (unobserved instance, unobserved side info)":

* ``BL``   -- side information concatenated to the features, one SVR
  (linear or quadratic kernel).
* ``SR``   -- one linear SVR per observed target; predictions blended by
  inverse-distance similarity between side-information vectors.
* ``MPLC`` -- SR's first stage, then one linear SVR per model parameter
  mapping side information to that parameter.
* ``DSIL`` -- one SVR on joint (x, s) points under the side-information
  kernel, in any of its three formulations.
"""

from __future__ import annotations

import math

import numpy as np

from . import svr
from .data import DataError, ZeroShotDataset, slice_by_target
from .kernels import JointArray, KernelSpec
from .svr import SvrConfig, SvrModel, extract_linear_weights

__all__ = [
    "VARIANT_NAMES",
    "ZeroShotRegressor",
    "BlRegressor",
    "SrRegressor",
    "MplcRegressor",
    "DsilRegressor",
    "make_regressor",
    "fit",
    "predict",
    "sr_similarity",
    "regressor_from_dict",
]

# duplicated side-information vectors count as exact matches
_EXACT_MATCH_DISTANCE = 1e-12

VARIANT_NAMES = ("BL_L", "BL_Q", "SR_E", "SR_M", "MPLC", "DSIL", "DSIL_PHI", "DSIL_KPHI", "DSIL_KQ")


def sr_similarity(s_o, s_u, distance: str = "euclidean") -> float:
    """Inverse-distance similarity 1/d; infinite on an exact match."""
    s_o = np.asarray(s_o, dtype=np.float64).ravel()
    s_u = np.asarray(s_u, dtype=np.float64).ravel()
    if s_o.shape != s_u.shape:
        raise ValueError(f"length mismatch: {s_o.shape[0]} vs {s_u.shape[0]}")
    d = _distance(s_o[None, :], s_u, distance)[0]
    if d < _EXACT_MATCH_DISTANCE:
        return math.inf
    return 1.0 / d


def _distance(S: np.ndarray, s_u: np.ndarray, distance: str) -> np.ndarray:
    diff = S - s_u[None, :]
    if distance == "euclidean":
        return np.sqrt(np.sum(diff * diff, axis=1))
    if distance == "manhattan":
        return np.sum(np.abs(diff), axis=1)
    raise ValueError(f"unknown distance {distance!r}")


class ZeroShotRegressor:
    """Common surface: fit(dataset, svr config) then predict(x_u, s_u)."""

    name = "base"

    def __init__(self):
        self.a_x_: int | None = None
        self.a_s_: int | None = None

    def fit(self, ds: ZeroShotDataset, cfg: SvrConfig) -> "ZeroShotRegressor":
        raise NotImplementedError

    def predict_many(self, X_u: np.ndarray, S_u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, x_u, s_u) -> float:
        x_u = np.asarray(x_u, dtype=np.float64).ravel()
        s_u = np.asarray(s_u, dtype=np.float64).ravel()
        return float(self.predict_many(x_u[None, :], s_u[None, :])[0])

    def _mark_fitted(self, ds: ZeroShotDataset) -> None:
        self.a_x_ = ds.a_x
        self.a_s_ = ds.a_s

    def _check_query(self, X_u, S_u) -> tuple[np.ndarray, np.ndarray]:
        if self.a_x_ is None:
            raise DataError(f"{self.name}: predict called before fit")
        X_u = np.atleast_2d(np.asarray(X_u, dtype=np.float64))
        S_u = np.atleast_2d(np.asarray(S_u, dtype=np.float64))
        if X_u.shape[0] != S_u.shape[0]:
            raise DataError(f"query row mismatch: {X_u.shape[0]} feature rows vs {S_u.shape[0]} side rows")
        if X_u.shape[1] != self.a_x_ or S_u.shape[1] != self.a_s_:
            raise DataError(
                f"dimension mismatch: fitted on (a_x={self.a_x_}, a_s={self.a_s_}), "
                f"got (a_x={X_u.shape[1]}, a_s={S_u.shape[1]})"
            )
        return X_u, S_u

    def to_dict(self) -> dict:
        raise NotImplementedError


class BlRegressor(ZeroShotRegressor):
    """Side information treated as ordinary features: one SVR on [x || s]."""

    def __init__(self, kernel: KernelSpec):
        super().__init__()
        if kernel.is_joint:
            raise ValueError("BL uses a plain-vector kernel")
        self.kernel = kernel
        self.name = "BL_Q" if kernel.kind == "quadratic" else "BL_L"
        self.model_: SvrModel | None = None

    def fit(self, ds: ZeroShotDataset, cfg: SvrConfig) -> "BlRegressor":
        Z = np.hstack([ds.features, ds.side_rows()])
        self.model_ = svr.fit(Z, ds.labels, self.kernel, cfg)
        self._mark_fitted(ds)
        return self

    def predict_many(self, X_u, S_u) -> np.ndarray:
        X_u, S_u = self._check_query(X_u, S_u)
        return self.model_.predict(np.hstack([X_u, S_u]))

    def to_dict(self) -> dict:
        return {"type": "bl", "kernel_kind": self.kernel.kind, "a_x": self.a_x_, "a_s": self.a_s_, "svr": self.model_.to_dict()}


class DsilRegressor(ZeroShotRegressor):
    """One-phase learning on joint points under the side-information kernel."""

    def __init__(self, form: str = "kq"):
        super().__init__()
        self.kernel = KernelSpec.dsil(form)
        self.name = f"DSIL_{form.upper()}"
        self.model_: SvrModel | None = None

    def fit(self, ds: ZeroShotDataset, cfg: SvrConfig) -> "DsilRegressor":
        pts = JointArray(ds.features, ds.side_rows())
        self.model_ = svr.fit(pts, ds.labels, self.kernel, cfg)
        self._mark_fitted(ds)
        return self

    def predict_many(self, X_u, S_u) -> np.ndarray:
        X_u, S_u = self._check_query(X_u, S_u)
        return self.model_.predict(JointArray(X_u, S_u))

    def to_dict(self) -> dict:
        return {"type": "dsil", "form": self.kernel.form, "a_x": self.a_x_, "a_s": self.a_s_, "svr": self.model_.to_dict()}


class SrRegressor(ZeroShotRegressor):
    """Per-target models blended by inverse-distance similarity.

    The prediction is a convex combination of the observed-target model
    outputs, so it can only interpolate them.  Exact side-information
    matches (distance below 1e-12) take the unweighted mean of the
    matching models, the limit of 1/d weighting.
    """

    def __init__(self, distance: str = "euclidean"):
        super().__init__()
        if distance not in ("euclidean", "manhattan"):
            raise ValueError(f"unknown distance {distance!r}")
        self.distance = distance
        self.name = "SR_E" if distance == "euclidean" else "SR_M"
        self.models_: list[SvrModel] = []
        self.side_matrix_: np.ndarray | None = None

    def fit(self, ds: ZeroShotDataset, cfg: SvrConfig) -> "SrRegressor":
        slices = slice_by_target(ds)
        _check_per_target(slices, self.name)
        self.models_ = [
            svr.fit(ds.features[sl.rows], ds.labels[sl.rows], KernelSpec.linear(), cfg)
            for sl in slices
        ]
        self.side_matrix_ = np.vstack([ds.side_info.vector(sl.target_id) for sl in slices])
        self._mark_fitted(ds)
        return self

    def _target_predictions(self, X_u: np.ndarray) -> np.ndarray:
        """(n_queries, m_targets) matrix of per-target model outputs."""
        return np.column_stack([m.predict(X_u) for m in self.models_])

    def _weights(self, s_u: np.ndarray) -> np.ndarray:
        d = _distance(self.side_matrix_, s_u, self.distance)
        exact = d < _EXACT_MATCH_DISTANCE
        w = np.zeros(len(d))
        if exact.any():
            w[exact] = 1.0
        else:
            w = 1.0 / d
        return w / w.sum()

    def predict_many(self, X_u, S_u) -> np.ndarray:
        X_u, S_u = self._check_query(X_u, S_u)
        preds = self._target_predictions(X_u)
        out = np.empty(X_u.shape[0])
        for i in range(X_u.shape[0]):
            out[i] = preds[i] @ self._weights(S_u[i])
        return out

    def to_dict(self) -> dict:
        return {
            "type": "sr",
            "distance": self.distance,
            "a_x": self.a_x_,
            "a_s": self.a_s_,
            "side_matrix": self.side_matrix_.tolist(),
            "models": [m.to_dict() for m in self.models_],
        }


class MplcRegressor(ZeroShotRegressor):
    """Learn per-target linear model parameters from side information.

    First stage fits one linear SVR per observed target and extracts its
    (w, b); the second stage fits p = a_x + 1 linear SVRs mapping side
    information to each parameter coordinate.  At prediction time the
    unobserved side information is turned into parameters and the
    resulting linear model scores the instance.
    """

    def __init__(self):
        super().__init__()
        self.name = "MPLC"
        self.param_models_: list[SvrModel] = []

    def fit(self, ds: ZeroShotDataset, cfg: SvrConfig) -> "MplcRegressor":
        slices = slice_by_target(ds)
        _check_per_target(slices, self.name)
        theta = np.empty((len(slices), ds.a_x + 1))
        for i, sl in enumerate(slices):
            first = svr.fit(ds.features[sl.rows], ds.labels[sl.rows], KernelSpec.linear(), cfg)
            lw = extract_linear_weights(first)
            theta[i, : ds.a_x] = lw.w
            theta[i, ds.a_x] = lw.b
        S = np.vstack([ds.side_info.vector(sl.target_id) for sl in slices])
        self.param_models_ = [
            svr.fit(S, theta[:, j], KernelSpec.linear(), cfg) for j in range(ds.a_x + 1)
        ]
        self._mark_fitted(ds)
        return self

    def _parameters_for(self, S_u: np.ndarray) -> np.ndarray:
        """(n_queries, a_x + 1) predicted parameters [w_1..w_ax, b]."""
        return np.column_stack([m.predict(S_u) for m in self.param_models_])

    def predict_many(self, X_u, S_u) -> np.ndarray:
        X_u, S_u = self._check_query(X_u, S_u)
        theta = self._parameters_for(S_u)
        return np.sum(X_u * theta[:, : self.a_x_], axis=1) + theta[:, self.a_x_]

    def to_dict(self) -> dict:
        return {
            "type": "mplc",
            "a_x": self.a_x_,
            "a_s": self.a_s_,
            "param_models": [m.to_dict() for m in self.param_models_],
        }


def _check_per_target(slices, name: str) -> None:
    if len(slices) < 2:
        raise DataError(f"{name} needs at least 2 observed targets, got {len(slices)}")
    for sl in slices:
        if len(sl) < 2:
            raise DataError(
                f"{name} needs at least 2 instances per target; target {sl.target_id!r} has {len(sl)}"
            )


def make_regressor(variant: str) -> ZeroShotRegressor:
    """Instantiate a method by its canonical name (case-insensitive)."""
    v = variant.strip().upper()
    if v == "BL_L":
        return BlRegressor(KernelSpec.linear())
    if v == "BL_Q":
        return BlRegressor(KernelSpec.quadratic(1.0))
    if v == "SR_E":
        return SrRegressor("euclidean")
    if v == "SR_M":
        return SrRegressor("manhattan")
    if v == "MPLC":
        return MplcRegressor()
    if v in ("DSIL", "DSIL_KQ"):
        return DsilRegressor("kq")
    if v == "DSIL_PHI":
        return DsilRegressor("phi")
    if v == "DSIL_KPHI":
        return DsilRegressor("kphi")
    raise ValueError(f"unknown method variant {variant!r}; known: {', '.join(VARIANT_NAMES)}")


def fit(ds: ZeroShotDataset, variant: str, svr_cfg: SvrConfig) -> ZeroShotRegressor:
    return make_regressor(variant).fit(ds, svr_cfg)


def predict(regressor: ZeroShotRegressor, x_u, s_u) -> float:
    return regressor.predict(x_u, s_u)


def regressor_from_dict(d: dict) -> ZeroShotRegressor:
    """Rebuild a fitted regressor from its serialized form."""
    t = d["type"]
    if t == "bl":
        r = BlRegressor(KernelSpec.linear() if d["kernel_kind"] == "linear" else KernelSpec.quadratic(1.0))
        r.model_ = SvrModel.from_dict(d["svr"])
    elif t == "dsil":
        r = DsilRegressor(d["form"])
        r.model_ = SvrModel.from_dict(d["svr"])
    elif t == "sr":
        r = SrRegressor(d["distance"])
        r.models_ = [SvrModel.from_dict(m) for m in d["models"]]
        r.side_matrix_ = np.asarray(d["side_matrix"], dtype=np.float64)
    elif t == "mplc":
        r = MplcRegressor()
        r.param_models_ = [SvrModel.from_dict(m) for m in d["param_models"]]
    else:
        raise DataError(f"unknown serialized regressor type {t!r}")
    r.a_x_ = d["a_x"]
    r.a_s_ = d["a_s"]
    return r
