"""Compactly supported kernels for the Nadaraya-Watson estimator.

Every kernel here is a radial profile ``K(v)`` on the normalized distance
``v = ||a - a'|| / lambda`` with hard support ``[0, 1]``: ``K(v) = 0`` for
``v > 1`` exactly, and ``chi_K <= K(v) <= c_K`` on the support.  The scaled
kernel used by the estimator is ``K_lambda(a, a') = K(v) / c_K``, which is
bounded by 1 and vanishes beyond distance ``lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import kv as bessel_kv

__all__ = [
    "KernelSpec",
    "ValidationReport",
    "eval_base",
    "eval_scaled",
    "scaled_weights",
    "validate",
]

KERNEL_KINDS = ("box", "cosine", "truncated-matern")

# Below this value of chi_K the Lemma-2 style sample-count budgets blow up;
# `validate` warns instead of failing because the bound itself stays sound.
CHI_UNDERFLOW_WARN = 1e-12


def _matern_profile(v: np.ndarray, nu: float, lengthscale: float) -> np.ndarray:
    """Matern correlation rho(v) with rho(0) = 1, evaluated on v >= 0."""
    v = np.asarray(v, dtype=float)
    scaled = math.sqrt(2.0 * nu) * v / lengthscale
    if nu == 0.5:
        return np.exp(-scaled)
    if nu == 1.5:
        return (1.0 + scaled) * np.exp(-scaled)
    if nu == 2.5:
        return (1.0 + scaled + scaled**2 / 3.0) * np.exp(-scaled)
    out = np.empty_like(v)
    zero = scaled == 0
    s = scaled[~zero]
    out[~zero] = (2.0 ** (1.0 - nu) / gamma_fn(nu)) * s**nu * bessel_kv(nu, s)
    out[zero] = 1.0
    return out


@dataclass(frozen=True)
class KernelSpec:
    """A compactly supported kernel plus its bound constants.

    Parameters
    ----------
    kind : {"box", "cosine", "truncated-matern"}
        Radial profile on the normalized distance v in [0, 1].
    lam : float
        Bandwidth; distances are normalized by it and the support of the
        scaled kernel is the closed ball of radius ``lam``.
    c_K : float
        Upper bound on K over [0, 1]; also the normalizer of the scaled
        kernel.
    chi_K : float
        Lower bound on K over [0, 1].  May be 0 for profiles that do not
        satisfy the lower bound (``validate`` flags those).
    nu, lengthscale : float
        Matern smoothness and lengthscale; only used by "truncated-matern".
    """

    kind: str
    lam: float
    c_K: float
    chi_K: float
    nu: float = 1.5
    lengthscale: float = 0.05

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.lam > 0:
            raise ValueError("bandwidth lam must be positive")
        if not self.c_K > 0:
            raise ValueError("c_K must be positive")
        if self.chi_K < 0 or self.chi_K > self.c_K:
            raise ValueError("chi_K must satisfy 0 <= chi_K <= c_K")
        if self.kind == "truncated-matern" and (self.nu <= 0 or self.lengthscale <= 0):
            raise ValueError("truncated-matern needs positive nu and lengthscale")

    @staticmethod
    def box(lam: float) -> "KernelSpec":
        return KernelSpec(kind="box", lam=lam, c_K=0.5, chi_K=0.5)

    @staticmethod
    def cosine(lam: float, chi_K: float = 0.0) -> "KernelSpec":
        # K(1) = 0, so no positive chi_K is actually valid; `validate`
        # reports this and box is the recommended default.
        return KernelSpec(kind="cosine", lam=lam, c_K=math.pi / 4.0, chi_K=chi_K)

    @staticmethod
    def truncated_matern(lam: float, nu: float = 1.5, lengthscale: float = 0.05) -> "KernelSpec":
        chi = float(_matern_profile(np.array([1.0]), nu, lengthscale)[0])
        return KernelSpec(
            kind="truncated-matern",
            lam=lam,
            c_K=1.0,
            chi_K=chi,
            nu=nu,
            lengthscale=lengthscale,
        )


def _profile(spec: KernelSpec, v: np.ndarray) -> np.ndarray:
    """Raw profile K(v) with the closed-support convention K(v)=0 iff v>1."""
    v = np.asarray(v, dtype=float)
    inside = v <= 1.0
    if spec.kind == "box":
        vals = np.full_like(v, 0.5)
    elif spec.kind == "cosine":
        vals = (math.pi / 4.0) * np.cos((math.pi / 2.0) * v)
    else:
        vals = _matern_profile(v, spec.nu, spec.lengthscale)
    return np.where(inside, vals, 0.0)


def eval_base(spec: KernelSpec, v: float) -> float:
    """Evaluate the raw kernel profile K(v) at a normalized distance v >= 0."""
    if v < 0:
        raise ValueError("normalized distance v must be nonnegative")
    return float(_profile(spec, np.asarray(v)))


def eval_scaled(spec: KernelSpec, a, a_prime) -> float:
    """Scaled kernel K(||a - a'|| / lam) / c_K; zero beyond distance lam."""
    a = np.asarray(a, dtype=float)
    a_prime = np.asarray(a_prime, dtype=float)
    if a.shape != a_prime.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {a_prime.shape}")
    dist = float(np.linalg.norm(a - a_prime))
    return eval_base(spec, dist / spec.lam) / spec.c_K


def scaled_weights(spec: KernelSpec, dists: np.ndarray) -> np.ndarray:
    """Vectorized scaled kernel over an array of raw distances."""
    dists = np.asarray(dists, dtype=float)
    return _profile(spec, dists / spec.lam) / spec.c_K


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)  # (v, value, reason)
    warnings: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate(spec: KernelSpec, n_samples: int = 2049, tol: float = 1e-12) -> ValidationReport:
    """Check the kernel bound assumptions numerically on a dense grid.

    Samples K on v in [0, 1] and verifies chi_K <= K(v) <= c_K everywhere,
    plus K(1 + eps) = 0.  Returns the violating (v, value) pairs; intended
    to run at config-load time.
    """
    report = ValidationReport(ok=True)
    vs = np.linspace(0.0, 1.0, n_samples)
    vals = _profile(spec, vs)

    low = vals < spec.chi_K - tol
    if np.any(low):
        j = int(np.argmin(vals))
        report.ok = False
        report.violations.append(
            (float(vs[j]), float(vals[j]), f"K(v) < chi_K = {spec.chi_K}")
        )
    high = vals > spec.c_K + tol
    if np.any(high):
        j = int(np.argmax(vals))
        report.ok = False
        report.violations.append(
            (float(vs[j]), float(vals[j]), f"K(v) > c_K = {spec.c_K}")
        )

    beyond = eval_base(spec, 1.0 + 1e-9)
    if beyond != 0.0:
        report.ok = False
        report.violations.append((1.0 + 1e-9, beyond, "K(v) != 0 outside support"))

    if spec.chi_K <= 0:
        report.ok = False
        report.violations.append((float("nan"), spec.chi_K, "chi_K must be positive"))
    elif spec.chi_K < CHI_UNDERFLOW_WARN:
        report.warnings.append(
            f"chi_K = {spec.chi_K:.3e} underflows; sample-count budgets will be enormous"
        )
    return report
