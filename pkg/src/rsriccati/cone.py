"""Geometry of the cone of symmetric positive definite matrices.

Everything here runs through a single eigendecomposition backend:
matrix square roots, logarithms, the affine-invariant (Riemann) and
Thompson distances, the Loewner partial order, and the contraction
coefficient bound for Riccati-type maps P -> M [P^-1 + Omega]^-1 M^T + W.
Dimensions are small (n up to a few tens), so there is no reason to use
anything fancier than dense symmetric eigensolvers.

All functions are pure; none mutate their arguments.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError, NumericalError, UsageError

# Absolute tolerance on the smallest eigenvalue for "positive definite".
SPD_TOL = 1e-10

# Relative asymmetry above which an input is considered a caller bug
# rather than roundoff.
ASYM_RTOL = 1e-8


def symmetrize(X, rtol: float = ASYM_RTOL) -> np.ndarray:
    """Return (X + X^T)/2 as a float array, rejecting genuinely asymmetric input.

    Roundoff-level asymmetry is silently folded away; relative asymmetry
    above `rtol` (Frobenius) raises UsageError.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise UsageError(f"expected a square matrix, got shape {X.shape}")
    sym = 0.5 * (X + X.T)
    scale = np.linalg.norm(X)
    if scale > 0.0:
        asym = np.linalg.norm(X - X.T) / scale
        if asym > rtol:
            raise UsageError(
                f"matrix is not symmetric: relative asymmetry {asym:.3e} "
                f"exceeds {rtol:.1e}"
            )
    return sym


class SpectralDecomposition(NamedTuple):
    """Eigenvalues (decreasing) and matching orthonormal eigenvectors."""

    eigenvalues: np.ndarray   # shape (n,), sorted decreasing
    eigenvectors: np.ndarray  # shape (n, n), column i pairs with eigenvalue i

    def reconstruct(self) -> np.ndarray:
        U, lam = self.eigenvectors, self.eigenvalues
        return (U * lam) @ U.T


def spectral(P) -> SpectralDecomposition:
    """Eigendecomposition P = U diag(lam) U^T with eigenvalues sorted decreasing."""
    P = symmetrize(P)
    try:
        lam, U = np.linalg.eigh(P)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"symmetric eigensolver failed on a {P.shape[0]}x{P.shape[0]} "
            f"matrix with Frobenius norm {np.linalg.norm(P):.3e}"
        ) from exc
    order = np.argsort(lam)[::-1]
    return SpectralDecomposition(lam[order], U[:, order])


def _require_spd(P, tol: float, what: str) -> SpectralDecomposition:
    dec = spectral(P)
    lam_min = dec.eigenvalues[-1]
    if lam_min <= tol:
        raise DomainError(
            f"{what} must be positive definite: smallest eigenvalue "
            f"{lam_min:.6e} <= tol {tol:.1e}"
        )
    return dec


def spd_sqrt(P, tol: float = SPD_TOL) -> np.ndarray:
    """Symmetric positive definite square root of an SPD matrix."""
    lam, U = _require_spd(P, tol, "spd_sqrt input")
    return (U * np.sqrt(lam)) @ U.T


def spd_log(P, tol: float = SPD_TOL) -> np.ndarray:
    """Matrix logarithm of an SPD matrix (symmetric, not necessarily definite)."""
    lam, U = _require_spd(P, tol, "spd_log input")
    return (U * np.log(lam)) @ U.T


def spd_inv(P, tol: float = SPD_TOL) -> np.ndarray:
    """Inverse of an SPD matrix through its eigendecomposition."""
    lam, U = _require_spd(P, tol, "spd_inv input")
    return (U / lam) @ U.T


def _relative_log_spectrum(P, Q, tol: float) -> np.ndarray:
    """log of the eigenvalues of P^-1 Q, computed via P^-1/2 Q P^-1/2."""
    lam_p, U = _require_spd(P, tol, "distance argument P")
    Q = symmetrize(Q)
    if Q.shape != U.shape:
        raise UsageError(f"dimension mismatch: {U.shape[0]} vs {Q.shape[0]}")
    P_inv_sqrt = (U / np.sqrt(lam_p)) @ U.T
    middle = symmetrize(P_inv_sqrt @ Q @ P_inv_sqrt, rtol=np.inf)
    s = spectral(middle).eigenvalues
    if s[-1] <= tol:
        raise DomainError(
            f"distance argument Q must be positive definite: smallest "
            f"eigenvalue of P^-1/2 Q P^-1/2 is {s[-1]:.6e}"
        )
    return np.log(s)


def riemann_distance(P, Q, tol: float = SPD_TOL) -> float:
    """Affine-invariant distance ||log(P^-1/2 Q P^-1/2)||_F between SPD matrices."""
    return float(np.linalg.norm(_relative_log_spectrum(P, Q, tol)))


def thompson_distance(P, Q, tol: float = SPD_TOL) -> float:
    """Thompson (spectral) metric: largest |log eigenvalue| of P^-1 Q."""
    log_s = _relative_log_spectrum(P, Q, tol)
    # max over both orderings of the arguments; the spectra are reciprocal,
    # so this is the largest magnitude of the log spectrum.
    return float(max(log_s[0], -log_s[-1]))


def translation_coefficient(P, Q, S) -> float:
    """Non-expansiveness factor alpha/(alpha+beta) of P -> P + S on sampled arguments.

    alpha is the larger of the top eigenvalues of P and Q, beta the
    smallest eigenvalue of the nonnegative definite translation S.
    """
    lam_p = _require_spd(P, SPD_TOL, "translation argument P").eigenvalues
    lam_q = _require_spd(Q, SPD_TOL, "translation argument Q").eigenvalues
    lam_s = spectral(S).eigenvalues
    if lam_s[-1] < -1e-12:
        raise DomainError(
            f"translation S must be nonnegative definite: smallest eigenvalue "
            f"{lam_s[-1]:.6e}"
        )
    alpha = max(lam_p[0], lam_q[0])
    beta = max(lam_s[-1], 0.0)
    return alpha / (alpha + beta)


def contraction_bound(M, Omega, W) -> float:
    """Contraction coefficient bound for P -> M [P^-1 + Omega]^-1 M^T + W.

    Returns lam_1(M Omega^-1 M^T) / (lam_n(W) + lam_1(M Omega^-1 M^T)),
    which is < 1 whenever Omega and W are positive definite.
    """
    M = np.asarray(M, dtype=float)
    Omega_inv = spd_inv(Omega)
    lam_w = _require_spd(W, SPD_TOL, "contraction_bound W").eigenvalues
    top = spectral(M @ Omega_inv @ M.T).eigenvalues[0]
    top = max(top, 0.0)
    return top / (lam_w[-1] + top)


def is_spd(P, tol: float = SPD_TOL) -> bool:
    """True iff the smallest eigenvalue of (symmetrized) P exceeds tol."""
    return bool(spectral(P).eigenvalues[-1] > tol)


def loewner_leq(P, Q, tol: float = SPD_TOL) -> bool:
    """Loewner order check P <= Q: smallest eigenvalue of Q - P >= -tol."""
    P = symmetrize(P)
    Q = symmetrize(Q)
    if P.shape != Q.shape:
        raise UsageError(f"dimension mismatch: {P.shape[0]} vs {Q.shape[0]}")
    return bool(spectral(Q - P).eigenvalues[-1] >= -tol)
