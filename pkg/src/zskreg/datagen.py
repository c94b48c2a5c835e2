"""Synthetic dataset generators with full seed determinism.

Two families share the label model y = sum_i alpha_i(s) * x_i + beta:

* family R: alpha_i(s) = sum_j gamma_ij * s_j + beta_i (linear dependence
  on the side information);
* family S: alpha_i(s) = sum_k tau_ik * delta(s, mu_k) / sum_k delta(s, mu_k)
  with delta the inverse of an L1 or L2 distance to a fixed prototype set,
  the norm drawn once per dataset with equal probability.

Every feature, side-information value, and coefficient is drawn from the
signed uniform on (-2,-1] U [1,2), which keeps magnitudes away from zero.
Generation is a pure function of the spec: one rng stream, fixed draw
order (side info, coefficients, then per-target instances).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import SideInfoTable, ZeroShotDataset
from .data import save_dataset as _save_csv_pair

__all__ = [
    "SynthSpec",
    "TimingGridSpec",
    "GeneratorCoefficients",
    "sample_signed_uniform",
    "generate",
    "generate_with_coefficients",
    "generate_timing_grid",
    "target_coefficients",
    "save_dataset",
]

_EXACT_PROTOTYPE_DISTANCE = 1e-12


@dataclass(frozen=True)
class SynthSpec:
    """Shape and seed of one synthetic dataset."""

    family: str
    m_o: int
    a_s: int
    n_o: int = 500
    a_x: int = 50
    seed: int = 0
    d_prototypes: int = 10

    def __post_init__(self):
        if self.family not in ("R", "S"):
            raise ValueError(f"family must be 'R' or 'S', got {self.family!r}")
        for fieldname in ("m_o", "a_s", "n_o", "a_x"):
            if getattr(self, fieldname) < 1:
                raise ValueError(f"{fieldname} must be >= 1")
        if self.family == "S" and self.d_prototypes < 1:
            raise ValueError("family S needs d_prototypes >= 1")

    @property
    def name(self) -> str:
        return f"{self.family}-{self.m_o}-{self.a_s}"

    def to_dict(self) -> dict:
        d = {
            "family": self.family,
            "m_o": self.m_o,
            "a_s": self.a_s,
            "n_o": self.n_o,
            "a_x": self.a_x,
            "seed": self.seed,
        }
        if self.family == "S":
            d["d_prototypes"] = self.d_prototypes
        return d


@dataclass
class GeneratorCoefficients:
    """Label-model coefficients; kept out of the CSVs, exposed for tests."""

    beta: float
    beta_i: np.ndarray | None = None       # family R, (a_x,)
    gamma: np.ndarray | None = None        # family R, (a_x, a_s)
    tau: np.ndarray | None = None          # family S, (a_x, d)
    prototypes: np.ndarray | None = None   # family S, (d, a_s)
    norm: str | None = None                # family S, "l1" | "l2"


def sample_signed_uniform(rng: np.random.Generator, size=None) -> np.ndarray | float:
    """Draw from the uniform on (-2,-1] U [1,2): 1 <= |v| < 2, sign fair."""
    mag = rng.uniform(1.0, 2.0, size=size)
    sign = np.where(rng.random(size=size) < 0.5, -1.0, 1.0)
    return sign * mag


def _alpha_r(S_row: np.ndarray, coeffs: GeneratorCoefficients) -> np.ndarray:
    return coeffs.gamma @ S_row + coeffs.beta_i


def _alpha_s(S_row: np.ndarray, coeffs: GeneratorCoefficients) -> np.ndarray:
    diff = coeffs.prototypes - S_row[None, :]
    if coeffs.norm == "l1":
        d = np.sum(np.abs(diff), axis=1)
    else:
        d = np.sqrt(np.sum(diff * diff, axis=1))
    exact = d < _EXACT_PROTOTYPE_DISTANCE
    if exact.any():
        # the 1/d weighting collapses onto exact-match prototypes
        w = exact.astype(np.float64)
    else:
        w = 1.0 / d
    w = w / w.sum()
    return coeffs.tau @ w


def target_coefficients(spec: SynthSpec, coeffs: GeneratorCoefficients, s: np.ndarray) -> np.ndarray:
    """alpha(s) vector (length a_x) for one side-information vector."""
    s = np.asarray(s, dtype=np.float64).ravel()
    return _alpha_r(s, coeffs) if spec.family == "R" else _alpha_s(s, coeffs)


def generate_with_coefficients(
    spec: SynthSpec, coefficients: GeneratorCoefficients | None = None
) -> tuple[ZeroShotDataset, GeneratorCoefficients]:
    """Generate a dataset and return the label-model coefficients with it.

    Passing ``coefficients`` overrides the drawn ones (test hook); the
    side-information and feature draws are unchanged.
    """
    rng = np.random.default_rng(spec.seed)
    S = sample_signed_uniform(rng, (spec.m_o, spec.a_s))

    drawn = _draw_coefficients(spec, rng)
    coeffs = coefficients if coefficients is not None else drawn
    if coeffs.beta_i is not None:
        coeffs.beta_i = np.asarray(coeffs.beta_i, dtype=np.float64)
    if coeffs.gamma is not None:
        coeffs.gamma = np.asarray(coeffs.gamma, dtype=np.float64)

    feats = np.empty((spec.m_o * spec.n_o, spec.a_x))
    labels = np.empty(spec.m_o * spec.n_o)
    ids: list[str] = []
    for i in range(spec.m_o):
        X_i = sample_signed_uniform(rng, (spec.n_o, spec.a_x))
        alpha = target_coefficients(spec, coeffs, S[i])
        lo = i * spec.n_o
        feats[lo : lo + spec.n_o] = X_i
        labels[lo : lo + spec.n_o] = X_i @ alpha + coeffs.beta
        ids.extend([f"t{i}"] * spec.n_o)

    side = SideInfoTable([(f"t{i}", S[i]) for i in range(spec.m_o)])
    ds = ZeroShotDataset(feats, ids, labels, side, name=spec.name)
    return ds, coeffs


def _draw_coefficients(spec: SynthSpec, rng: np.random.Generator) -> GeneratorCoefficients:
    beta = float(sample_signed_uniform(rng))
    if spec.family == "R":
        beta_i = sample_signed_uniform(rng, spec.a_x)
        gamma = sample_signed_uniform(rng, (spec.a_x, spec.a_s))
        return GeneratorCoefficients(beta=beta, beta_i=beta_i, gamma=gamma)
    tau = sample_signed_uniform(rng, (spec.a_x, spec.d_prototypes))
    prototypes = sample_signed_uniform(rng, (spec.d_prototypes, spec.a_s))
    norm = "l1" if rng.random() < 0.5 else "l2"
    return GeneratorCoefficients(beta=beta, tau=tau, prototypes=prototypes, norm=norm)


def generate(spec: SynthSpec) -> ZeroShotDataset:
    """Generate one synthetic dataset, deterministically from the spec."""
    return generate_with_coefficients(spec)[0]


@dataclass(frozen=True)
class TimingGridSpec:
    """Index-wise paired size grid for the timing study.

    (a_x, a_s) pairs are crossed with (n_o, m_o) pairs, so the joint
    feature counts a_x+a_s take {20, 200, 500, 1000} and the instance
    counts n_o*m_o take {50, 200, 450, 800}.
    """

    ax_values: tuple[int, ...] = (10, 100, 250, 500)
    as_values: tuple[int, ...] = (10, 100, 250, 500)
    no_values: tuple[int, ...] = (10, 20, 30, 40)
    mo_values: tuple[int, ...] = (5, 10, 15, 20)
    seed: int = 0

    def __post_init__(self):
        for name in ("ax_values", "as_values", "no_values", "mo_values"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be non-empty")
        if len(self.ax_values) != len(self.as_values):
            raise ValueError("ax_values and as_values must pair index-wise")
        if len(self.no_values) != len(self.mo_values):
            raise ValueError("no_values and mo_values must pair index-wise")


def generate_timing_grid(spec: TimingGridSpec) -> list[ZeroShotDataset]:
    """One R-family dataset per (feature pair) x (instance pair) grid point."""
    out = []
    for fi, (ax, as_) in enumerate(zip(spec.ax_values, spec.as_values)):
        for ni, (no, mo) in enumerate(zip(spec.no_values, spec.mo_values)):
            sub = SynthSpec(
                family="R",
                m_o=mo,
                a_s=as_,
                n_o=no,
                a_x=ax,
                seed=spec.seed * 1_000_003 + fi * len(spec.no_values) + ni,
            )
            ds = generate(sub)
            ds.name = f"timing-f{ax + as_}-n{no * mo}"
            out.append(ds)
    return out


def save_dataset(ds: ZeroShotDataset, directory, spec: SynthSpec | None = None) -> Path:
    """Write the CSV pair plus a meta.json recording the spec and seed."""
    meta = {"name": ds.name, "n_rows": ds.n_rows, "a_x": ds.a_x, "a_s": ds.a_s}
    if spec is not None:
        meta["spec"] = spec.to_dict()
        meta["seed"] = spec.seed
    return _save_csv_pair(ds, directory, meta=meta)
