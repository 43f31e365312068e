"""Fluctuation regime, CLT covariance and variance-decay exponent."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .limits import require_supported
from .netmodel import DerivedMatrices
from .spectral import EigenDecomposition, eigendecompose

EIG_ATOL = 1e-9
IMAG_ATOL = 1e-9
POLE_ATOL = 1e-12
SYM_ATOL = 1e-12


class RegimeError(ValueError):
    pass


class Regime(enum.Enum):
    DIFFUSIVE = "diffusive"
    CRITICAL = "critical"
    CRITICAL_NON_SIMPLE = "critical_non_simple"
    SUBCRITICAL = "subcritical"


SCALING = {
    Regime.DIFFUSIVE: "sqrt(t)",
    Regime.CRITICAL: "sqrt(t/log t)",
    Regime.CRITICAL_NON_SIMPLE: "unsupported",
    Regime.SUBCRITICAL: "unsupported",
}


@dataclass(frozen=True)
class DecayReport:
    re_lambda_max: float
    branch: str          # "power", "log" or "inverse"
    exponent: float      # power of t; the "log" branch carries -1 plus a log t factor

    @property
    def label(self) -> str:
        if self.branch == "log":
            return "t^-1 log t"
        return f"t^{self.exponent:.6g}"


@dataclass(frozen=True)
class FluctuationReport:
    rho: float
    regime: Regime
    scaling: str
    sigma: np.ndarray | None
    theta: np.ndarray
    decay: DecayReport
    eigenvalues: np.ndarray


def _flexible_eig(dm: DerivedMatrices) -> EigenDecomposition:
    return eigendecompose(dm.W_F)


def classify_regime(dm: DerivedMatrices, decomposition: EigenDecomposition | None = None):
    """Return ``(rho, regime)`` with ``rho = 1 - max Re(lambda(W_F))``."""
    eig = decomposition or _flexible_eig(dm)
    lam = eig.eigenvalues
    rho = 1.0 - float(lam.real.max())
    if rho > 0.5 + EIG_ATOL:
        return rho, Regime.DIFFUSIVE
    if rho < 0.5 - EIG_ATOL:
        return rho, Regime.SUBCRITICAL
    at_half = np.abs(lam - 0.5) <= EIG_ATOL
    on_line = np.abs(lam.real - 0.5) <= EIG_ATOL
    if at_half.sum() == 1 and on_line.sum() == 1:
        return rho, Regime.CRITICAL
    return rho, Regime.CRITICAL_NON_SIMPLE


def theta_diag(dm: DerivedMatrices, z_star) -> np.ndarray:
    """Bernoulli variances ``Z(1-Z)``: limits on F, initial values on S."""
    z = np.asarray(z_star, dtype=float)
    return z * (1.0 - z)


def _full_right_vectors(dm: DerivedMatrices, eig: EigenDecomposition) -> np.ndarray:
    """Extend right eigenvectors of W_F to eigenvectors of the full W.

    Stubborn columns of W vanish, so ``u_S = W_SF u_F / lambda``; modes with
    lambda = 0 drop out of every covariance term and are left at zero.
    """
    lam = eig.eigenvalues
    U_F = eig.right_vectors
    U_S = dm.W_SF.astype(complex) @ U_F
    nz = np.abs(lam) > 0
    U_S[:, nz] /= lam[nz]
    U_S[:, ~nz] = 0.0
    return np.vstack([U_F, U_S])


def _real_symmetric(sigma: np.ndarray) -> np.ndarray:
    residue = float(np.abs(sigma.imag).max()) if sigma.size else 0.0
    if residue > IMAG_ATOL:
        raise ArithmeticError(f"covariance has imaginary residue {residue:.3g}")
    real = sigma.real
    asym = float(np.abs(real - real.T).max()) if real.size else 0.0
    if asym > EIG_ATOL * max(1.0, float(np.abs(real).max())):
        raise ArithmeticError(f"covariance asymmetric by {asym:.3g}")
    return 0.5 * (real + real.T)


def sigma_general(dm: DerivedMatrices, z_star, decomposition: EigenDecomposition | None = None):
    """Limiting covariance on F from the eigendecomposition of W.

    Diffusive regime: sum over mode pairs of
    ``lam_k lam_l (u_k' Theta u_l) / (1 - lam_k - lam_l) v_k' v_l``.
    Critical regime: only the simple mode at 1/2 survives, with weight 1/4.
    """
    require_supported(dm)
    eig = decomposition or _flexible_eig(dm)
    _, regime = classify_regime(dm, eig)
    if regime not in (Regime.DIFFUSIVE, Regime.CRITICAL):
        raise RegimeError(f"no covariance formula in the {regime.value} regime")
    if not eig.diagonalizable:
        raise RegimeError("W_F is not diagonalizable")
    lam = eig.eigenvalues
    U = _full_right_vectors(dm, eig)
    V = eig.left_vectors
    theta = theta_diag(dm, z_star)
    gram = U.T @ (theta[:, None] * U)   # u_k' Theta u_l, plain transpose

    if regime is Regime.CRITICAL:
        k = int(np.argmin(np.abs(lam - 0.5)))
        sigma = 0.25 * gram[k, k] * np.outer(V[k], V[k])
        return _real_symmetric(sigma)

    denom = 1.0 - lam[:, None] - lam[None, :]
    if np.abs(denom).min() < POLE_ATOL:
        raise AssertionError("pole 1 - lam_k - lam_l = 0 in the diffusive regime")
    G = lam[:, None] * lam[None, :] * gram / denom
    return _real_symmetric(V.T @ G @ V)


def sigma_symmetric(dm: DerivedMatrices, z_star: float):
    """Shortcut covariance for a symmetric W and a synchronised limit."""
    require_supported(dm)
    W = dm.W
    if np.abs(W - W.T).max() > SYM_ATOL:
        raise RegimeError("W is not symmetric")
    W_F = dm.W_F
    f = dm.n_flexible
    scale = z_star * (1.0 - z_star)
    _, regime = classify_regime(dm)
    if regime is Regime.DIFFUSIVE:
        return scale * (W_F @ W_F) @ np.linalg.inv(np.eye(f) - 2.0 * W_F)
    if regime is Regime.CRITICAL:
        lam, Q = np.linalg.eigh(W_F)
        u1 = Q[:, int(np.argmax(lam))]
        return scale * (W_F @ W_F) @ np.outer(u1, u1)
    raise RegimeError(f"no covariance formula in the {regime.value} regime")


def decay_exponent(dm: DerivedMatrices, decomposition: EigenDecomposition | None = None) -> DecayReport:
    eig = decomposition or _flexible_eig(dm)
    re_max = float(eig.eigenvalues.real.max())
    if re_max > 0.5 + EIG_ATOL:
        return DecayReport(re_max, "power", 2.0 * re_max - 2.0)
    if re_max >= 0.5 - EIG_ATOL:
        return DecayReport(re_max, "log", -1.0)
    return DecayReport(re_max, "inverse", -1.0)


def analyze(dm: DerivedMatrices, z_star) -> FluctuationReport:
    """Regime, covariance (when a formula exists) and decay exponent."""
    eig = _flexible_eig(dm)
    rho, regime = classify_regime(dm, eig)
    sigma = None
    if regime in (Regime.DIFFUSIVE, Regime.CRITICAL) and eig.diagonalizable:
        sigma = sigma_general(dm, z_star, eig)
    return FluctuationReport(
        rho=rho,
        regime=regime,
        scaling=SCALING[regime],
        sigma=sigma,
        theta=theta_diag(dm, z_star),
        decay=decay_exponent(dm, eig),
        eigenvalues=eig.eigenvalues,
    )
