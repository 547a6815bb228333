"""State-space model container and the N-block (downsampled) machinery.

A model x_{t+1} = A x_t + B u_t, y_t = C x_t + v_t (unit noise
covariances) carries an extra penalty output D used by the
risk-sensitive estimation problem. Downsampling by a block length N
yields stacked reachability/observability matrices, block Toeplitz
impulse-response maps, and the risk-dependent Gramians Omega_N(theta)
and W_N(theta) whose positivity controls contraction of the N-fold
Riccati map. The thresholds computed here:

  theta_N  -- largest risk parameter keeping the whitened block input
              covariance positive definite,
  tau_N    -- first risk parameter at which the observability Gramian
              Omega_N(theta) becomes singular (found by bisection;
              Omega is monotone decreasing in theta).

Stacking convention: block vectors put the NEWEST sample on top, and
the stacked observability matrix runs from C A^{N-1} on its top block
row down to C at the bottom. Every stacked object in this module goes
through the same offset helper so the convention cannot drift.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cone import spectral, symmetrize
from .errors import DomainError, UsageError

# Relative singular-value threshold for rank decisions.
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class StateSpaceModel:
    """Constant-coefficient Gauss-Markov model with a risk penalty output.

    A: n x n dynamics, B: n x m process-noise input, C: p x n
    measurement output, D: q x n penalty output (full row rank, q <= n).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2:
                raise UsageError(f"field {name!r} must be a 2-D matrix")
            if not np.all(np.isfinite(arr)):
                raise UsageError(f"field {name!r} contains non-finite entries")
            object.__setattr__(self, name, arr)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise UsageError(f"field 'A' must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise UsageError(
                f"field 'B' must have {n} rows to match A, got {self.B.shape}"
            )
        if self.C.shape[1] != n:
            raise UsageError(
                f"field 'C' must have {n} columns to match A, got {self.C.shape}"
            )
        if self.D.shape[1] != n:
            raise UsageError(
                f"field 'D' must have {n} columns to match A, got {self.D.shape}"
            )
        if self.D.shape[0] > n:
            raise UsageError(
                f"field 'D' must have at most {n} rows, got {self.D.shape[0]}"
            )
        sv = np.linalg.svd(self.D, compute_uv=False)
        if sv[-1] <= RANK_RTOL * sv[0]:
            raise UsageError(
                f"field 'D' must have full row rank: singular values span "
                f"[{sv[-1]:.3e}, {sv[0]:.3e}]"
            )

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def q(self) -> int:
        return self.D.shape[0]


def load_model(text) -> StateSpaceModel:
    """Build a validated model from a JSON document (string or parsed dict).

    Keys "A", "B", "C" are required row-major arrays of arrays; "D" is
    optional and defaults to the identity.
    """
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"model document is not valid JSON: {exc}") from exc
    else:
        doc = text
    if not isinstance(doc, dict):
        raise UsageError("model document must be a JSON object")
    for key in ("A", "B", "C"):
        if key not in doc:
            raise UsageError(f"model document is missing required field {key!r}")
    mats = {}
    for key in ("A", "B", "C", "D"):
        if key not in doc:
            continue
        try:
            mats[key] = np.asarray(doc[key], dtype=float)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"field {key!r} is not a numeric matrix") from exc
    if "D" not in mats:
        mats["D"] = np.eye(np.asarray(mats["A"]).shape[0])
    return StateSpaceModel(A=mats["A"], B=mats["B"], C=mats["C"], D=mats["D"])


def _offsets(N: int) -> range:
    """Time offsets of the block rows, newest sample on top.

    Row block i of any stacked N-block object refers to sample offset
    N-1-i. Both the stacked observability matrices and the block
    Toeplitz impulse maps index through here.
    """
    if N < 1:
        raise UsageError(f"block length N must be >= 1, got {N}")
    return range(N - 1, -1, -1)


def _powers(A: np.ndarray, count: int) -> list[np.ndarray]:
    out = [np.eye(A.shape[0])]
    for _ in range(count - 1):
        out.append(out[-1] @ A)
    return out


def reachability_matrix(model: StateSpaceModel, N: int) -> np.ndarray:
    """[B  AB  ...  A^{N-1} B], shape n x Nm."""
    if N < 1:
        raise UsageError(f"block length N must be >= 1, got {N}")
    pw = _powers(model.A, N)
    return np.hstack([pw[k] @ model.B for k in range(N)])


def _output_matrix(model: StateSpaceModel, output: str) -> np.ndarray:
    if output == "C":
        return model.C
    if output == "D":
        return model.D
    raise UsageError(f"output selector must be 'C' or 'D', got {output!r}")


def observability_matrix(model: StateSpaceModel, N: int, output: str = "C") -> np.ndarray:
    """Stacked observability matrix with C A^{N-1} on top and C at the bottom."""
    out = _output_matrix(model, output)
    pw = _powers(model.A, N)
    return np.vstack([out @ pw[t] for t in _offsets(N)])


def impulse_toeplitz(model: StateSpaceModel, N: int, output: str = "C") -> np.ndarray:
    """Strictly upper block-triangular impulse-response map of the block model.

    Block (i, j) equals out @ A^{j-i-1} @ B for j > i and zero
    elsewhere; with the newest-on-top stacking this maps the stacked
    inputs to their contribution in the stacked outputs.
    """
    out = _output_matrix(model, output)
    rows = out.shape[0]
    m = model.m
    pw = _powers(model.A, max(N - 1, 1))
    impulse = [None] + [out @ pw[t - 1] @ model.B for t in range(1, N)]
    T = np.zeros((N * rows, N * m))
    offs = list(_offsets(N))
    for i in range(N):
        for j in range(N):
            delay = offs[i] - offs[j]  # output sample minus input sample time
            if delay >= 1:
                T[i * rows:(i + 1) * rows, j * m:(j + 1) * m] = impulse[delay]
    return T


def _rank(M: np.ndarray) -> int:
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > RANK_RTOL * sv[0]))


def is_reachable(model: StateSpaceModel) -> bool:
    return _rank(reachability_matrix(model, model.n)) == model.n


def is_observable(model: StateSpaceModel) -> bool:
    return _rank(observability_matrix(model, model.n)) == model.n


@dataclass(frozen=True)
class BlockModel:
    """All N-block, theta-dependent derived matrices of a model.

    R, O, O_R are the block reachability/observability stacks, H and L
    the impulse Toeplitz maps to the measurement and penalty outputs.
    K is the (indefinite) Gram matrix of the stacked observation noise,
    S the Schur complement of its measurement block, Q the whitened
    block input covariance, J the penalty innovation map, Omega / W the
    theta-dependent observability and reachability Gramians, alpha the
    closed-loop block transition matrix, and G / G_R the block
    projection gains. K and S have no finite value in the risk-neutral
    case theta = 0 (their penalty block carries a -1/theta term) and
    are None there; everything derived from them uses the theta -> 0
    limit instead.
    """

    N: int
    theta: float
    R: np.ndarray
    O: np.ndarray
    O_R: np.ndarray
    H: np.ndarray
    L: np.ndarray
    K: Optional[np.ndarray]
    S: Optional[np.ndarray]
    Q: np.ndarray
    J: np.ndarray
    Omega: np.ndarray
    W: np.ndarray
    alpha: np.ndarray
    G: np.ndarray
    G_R: np.ndarray


def theta_N(model: StateSpaceModel, N: int) -> float:
    """Positivity threshold of the whitened block input covariance.

    The reciprocal of the largest eigenvalue of
    L (I + H^T H)^{-1} L^T; +inf when that eigenvalue vanishes (no
    feedthrough from the process noise to the penalty output).
    """
    H = impulse_toeplitz(model, N, "C")
    L = impulse_toeplitz(model, N, "D")
    psi = np.eye(H.shape[1]) + H.T @ H
    core = symmetrize(L @ np.linalg.solve(psi, L.T), rtol=np.inf)
    lam_1 = spectral(core).eigenvalues[0]
    if lam_1 < 1e-14:
        return math.inf
    return 1.0 / lam_1


def build_block_model(model: StateSpaceModel, N: int, theta: float = 0.0) -> BlockModel:
    """Assemble every N-block matrix at risk parameter theta.

    The Gram matrix of the stacked noise is never inverted densely: its
    block LDU factorization isolates the -1/theta penalty block in the
    Schur complement S, which stays bounded for all theta in [0,
    theta_N) and vanishes from the formulas in the limit theta -> 0.
    Requires theta < theta_N (the whitened input covariance Q must stay
    positive definite).
    """
    if theta < 0.0:
        raise DomainError(f"risk parameter theta must be >= 0, got {theta}")
    R = reachability_matrix(model, N)
    O = observability_matrix(model, N, "C")
    O_R = observability_matrix(model, N, "D")
    H = impulse_toeplitz(model, N, "C")
    L = impulse_toeplitz(model, N, "D")
    Nm = N * model.m
    Np = N * model.p
    Nq = N * model.q

    phi = np.eye(Np) + H @ H.T          # measurement-block Gram
    psi = np.eye(Nm) + H.T @ H
    phi_inv = symmetrize(np.linalg.inv(phi), rtol=np.inf)
    psi_inv = symmetrize(np.linalg.inv(psi), rtol=np.inf)

    # Whitened block input covariance; positive definiteness is exactly
    # the theta < theta_N condition.
    Q_inner = psi - theta * (L.T @ L)
    dec = spectral(Q_inner)
    if dec.eigenvalues[-1] <= 1e-12:
        raise DomainError(
            f"Q_N^theta not positive definite at theta={theta:.6e} "
            f"(smallest eigenvalue {dec.eigenvalues[-1]:.6e}); "
            f"requires theta < theta_N"
        )
    Q = (dec.eigenvectors / dec.eigenvalues) @ dec.eigenvectors.T

    X = L @ H.T @ phi_inv               # lower LDU coupling block
    J = O_R - X @ O

    if theta > 0.0:
        S = symmetrize(
            -np.eye(Nq) / theta + L @ psi_inv @ L.T, rtol=np.inf
        )
        S_inv = symmetrize(np.linalg.inv(S), rtol=np.inf)
        K = np.block([
            [phi, H @ L.T],
            [L @ H.T, -np.eye(Nq) / theta + L @ L.T],
        ])
    else:
        S = None
        S_inv = np.zeros((Nq, Nq))      # limit of S^-1 as theta -> 0
        K = None

    Omega = symmetrize(O.T @ phi_inv @ O + J.T @ S_inv @ J, rtol=np.inf)
    W = symmetrize(R @ Q @ R.T, rtol=np.inf)

    G_risk_free = H.T @ phi_inv
    G_R = psi_inv @ L.T @ S_inv
    G = G_risk_free - G_R @ (L @ G_risk_free)
    A_N = _powers(model.A, N + 1)[N]
    alpha = A_N - R @ (G @ O + G_R @ O_R)

    return BlockModel(
        N=N, theta=theta, R=R, O=O, O_R=O_R, H=H, L=L, K=K, S=S, Q=Q,
        J=J, Omega=Omega, W=W, alpha=alpha, G=G, G_R=G_R,
    )


def ldu_factors(block: BlockModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Block LDU factors of the stacked-noise Gram matrix K (theta > 0).

    Returns (lower, diag, upper) with lower @ diag @ upper == K.
    """
    if block.S is None:
        raise DomainError("the Gram matrix K has no finite value at theta = 0")
    Np = block.H.shape[0]
    Nq = block.L.shape[0]
    phi = np.eye(Np) + block.H @ block.H.T
    X = block.L @ block.H.T @ np.linalg.inv(phi)
    lower = np.block([
        [np.eye(Np), np.zeros((Np, Nq))],
        [X, np.eye(Nq)],
    ])
    diag = np.block([
        [phi, np.zeros((Np, Nq))],
        [np.zeros((Nq, Np)), block.S],
    ])
    upper = np.block([
        [np.eye(Np), X.T],
        [np.zeros((Nq, Np)), np.eye(Nq)],
    ])
    return lower, diag, upper


@dataclass(frozen=True)
class Thresholds:
    """A-priori risk-parameter thresholds at block length N.

    tau_N <= theta_N always; tau_is_capped records that the
    observability Gramian stayed positive definite over the whole
    search bracket, so tau_N reports the cap rather than a singularity.
    """

    N: int
    theta_N: float
    tau_N: float
    tau_is_capped: bool


def _omega_lambda_min(model: StateSpaceModel, N: int, theta: float) -> float:
    return spectral(build_block_model(model, N, theta).Omega).eigenvalues[-1]


def tau_N(model: StateSpaceModel, N: int, tol: float = 1e-6) -> Thresholds:
    """First risk parameter at which Omega_N(theta) becomes singular.

    Bisection of the smallest eigenvalue of Omega_N(theta) over
    [0, theta_N); valid because the Gramian is monotone decreasing in
    theta. When theta_N is infinite the bracket is capped at the
    documented heuristic 1e3 / lam_1(Omega_N(0)). The relative bracket
    width at exit is at most tol.
    """
    th_N = theta_N(model, N)
    lam0 = spectral(build_block_model(model, N, 0.0).Omega).eigenvalues
    if lam0[-1] <= 0.0:
        raise DomainError(
            f"pair (C, A) not observable at block length N={N}: "
            f"smallest eigenvalue of Omega_N(0) is {lam0[-1]:.6e}"
        )
    if math.isinf(th_N):
        hi = 1e3 / lam0[0]
        cap = hi
    else:
        hi = (1.0 - 1e-9) * th_N
        cap = th_N
    if _omega_lambda_min(model, N, hi) > 0.0:
        return Thresholds(N=N, theta_N=th_N, tau_N=cap, tau_is_capped=True)
    lo = 0.0
    for _ in range(200):
        if hi - lo <= tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if _omega_lambda_min(model, N, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    capped = tau >= (1.0 - 10.0 * tol) * cap
    return Thresholds(N=N, theta_N=th_N, tau_N=tau, tau_is_capped=capped)
