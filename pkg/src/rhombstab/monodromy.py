"""Monodromy analysis of the reduced linear Hamiltonian systems.

Three independent 4-dimensional blocks arise from the symplectic reduction:
the Kepler block (whose monodromy is unipotent with a 3-dimensional fixed
space), the xi block driven by (phi1, phi2), and the eta block driven by
(psi1, psi2).  Their symplectic sum is the full 12-dimensional linearization.

Each system is gamma' = J B(theta) gamma with B symmetric and 2*pi periodic
in the true anomaly theta; the monodromy matrix is gamma(2*pi).  Integration
uses an adaptive 8th-order Runge-Kutta on the matrix entries; symplecticity
is monitored at checkpoints as an independent error certificate, never
enforced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment

from .central_config import J2, DomainError, _check_shape_param
from .reduced_coeffs import coefficient_matrices, phi, psi

KINDS = ("kepler", "xi", "eta", "full")

ECC_CAP = 0.99  # coefficients behave like 1/(1-e) as e -> 1; see docs

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-13
RESIDUAL_BUDGET = 1e-9
CIRCLE_TOL = 1e-6


class ToleranceNotMetError(RuntimeError):
    """Symplectic residual exceeded ten times its budget."""


@dataclass(frozen=True)
class LinearSystem:
    """One of the reduced blocks, or their 12-dimensional symplectic sum."""

    kind: str
    u: float = 1.0
    e: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind={self.kind!r} not one of {KINDS}")
        if self.kind != "kepler":
            _check_shape_param(self.u)
        if not (0.0 <= self.e <= ECC_CAP):
            raise DomainError(f"eccentricity e={self.e!r} outside [0, {ECC_CAP}]")

    @property
    def dimension(self) -> int:
        return 12 if self.kind == "full" else 4


def jmat(dim: int) -> np.ndarray:
    """Standard symplectic J = [[0, -I], [I, 0]] of even size dim."""
    half = dim // 2
    J = np.zeros((dim, dim))
    J[:half, half:] = -np.eye(half)
    J[half:, :half] = np.eye(half)
    return J


def _kepler_lower_right(e: float, theta: float) -> np.ndarray:
    denom = 1.0 + e * math.cos(theta)
    return np.diag([-(2.0 - e * math.cos(theta)) / denom, 1.0])


def system_matrix(sys: LinearSystem, theta: float) -> np.ndarray:
    """Symmetric coefficient B(theta) of gamma' = J B(theta) gamma."""
    if sys.kind == "full":
        lower = [_kepler_lower_right(sys.e, theta)]
        K, T = coefficient_matrices(sys.u, sys.e, theta)
        lower.append(np.eye(2) - K)
        lower.append(np.eye(2) - T)
        B = np.eye(12)
        for i in range(3):
            sl = slice(2 * i, 2 * i + 2)
            sr = slice(6 + 2 * i, 6 + 2 * i + 2)
            B[sl, sr] = -J2
            B[sr, sl] = J2
            B[sr, sr] = lower[i]
        return B

    if sys.kind == "kepler":
        lower = _kepler_lower_right(sys.e, theta)
    else:
        K, T = coefficient_matrices(sys.u, sys.e, theta)
        lower = np.eye(2) - (K if sys.kind == "xi" else T)
    B = np.eye(4)
    B[0:2, 2:4] = -J2
    B[2:4, 0:2] = J2
    B[2:4, 2:4] = lower
    return B


def symplectic_residual(M: np.ndarray) -> float:
    """Relative symplectic defect |M^T J M - J|_F / max(1, |M|_F^2).

    The normalization makes the certificate scale-free: strongly hyperbolic
    monodromies reach norms of 1e4, where even the exactly rounded matrix
    has a raw defect of order |M|^2 eps, so the raw norm would measure
    hyperbolic growth rather than integration error.
    """
    J = jmat(M.shape[0])
    raw = float(np.linalg.norm(M.T @ J @ M - J))
    return raw / max(1.0, float(np.linalg.norm(M)) ** 2)


def _sorted_eigenvalues(M: np.ndarray) -> np.ndarray:
    vals = np.linalg.eigvals(M)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def hyperbolic_pair_count(eigenvalues: np.ndarray, circle_tol: float = CIRCLE_TOL) -> int:
    """Number of {lambda, 1/lambda} pairs off the unit circle.

    Counting the modulus-greater-than-one representatives picks exactly one
    eigenvalue per pair, so a genuinely complex quadruple contributes two.
    """
    return int(np.sum(np.abs(eigenvalues) > 1.0 + circle_tol))


def _label(eigenvalues: np.ndarray, circle_tol: float) -> str:
    on_circle = np.abs(np.abs(eigenvalues) - 1.0) <= circle_tol
    if np.all(on_circle):
        return "elliptic"
    if not np.any(on_circle):
        return "hyperbolic"
    return "mixed"


def classify(result, circle_tol: float = CIRCLE_TOL) -> str:
    """Stability label from the eigenvalue moduli.

    "hyperbolic" when every eigenvalue is off the unit circle, "elliptic"
    when all are on it, "mixed" otherwise; "degenerate" when the label is
    not stable under halving circle_tol (eigenvalues sit at the tolerance
    boundary).  Accepts a MonodromyResult or a plain eigenvalue array.
    """
    if not (1e-10 <= circle_tol <= 1e-2):
        raise ValueError(f"circle_tol={circle_tol!r} outside [1e-10, 1e-2]")
    eigenvalues = np.asarray(getattr(result, "eigenvalues", result))
    label = _label(eigenvalues, circle_tol)
    if label != _label(eigenvalues, circle_tol / 2.0):
        return "degenerate"
    return label


@dataclass(frozen=True)
class MonodromyResult:
    system: LinearSystem
    matrix: np.ndarray
    eigenvalues: np.ndarray
    residual: float  # max symplectic residual over the checkpoints
    classification: str
    hyperbolic_pairs: int


def propagate(sys: LinearSystem, theta0: float, theta1: float,
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
              checkpoints: int = 0):
    """Fundamental solution over [theta0, theta1] starting from the identity.

    Returns (matrix, residual) where residual is the worst symplectic defect
    over `checkpoints` interior points plus the endpoint.
    """
    if rtol < 1e-13 or atol < 1e-13:
        raise ValueError("rtol and atol must be at least 1e-13")
    n = sys.dimension
    if theta1 == theta0:
        return np.eye(n), 0.0
    J = jmat(n)

    def rhs(theta, y):
        return (J @ system_matrix(sys, theta) @ y.reshape(n, n)).ravel()

    t_eval = np.linspace(theta0, theta1, checkpoints + 2)[1:]
    sol = solve_ivp(rhs, (theta0, theta1), np.eye(n).ravel(), method="DOP853",
                    rtol=rtol, atol=atol, t_eval=t_eval, dense_output=False)
    if not sol.success:
        raise RuntimeError(f"integration failed for {sys}: {sol.message}")
    mats = sol.y.T.reshape(-1, n, n)
    residual = max(symplectic_residual(m) for m in mats)
    return mats[-1], residual


def fundamental_solution(sys: LinearSystem, rtol: float = DEFAULT_RTOL,
                         atol: float = DEFAULT_ATOL,
                         residual_budget: float = RESIDUAL_BUDGET,
                         circle_tol: float = CIRCLE_TOL,
                         checkpoints: int = 16) -> MonodromyResult:
    """Monodromy matrix gamma(2*pi) with spectrum and classification."""
    M, residual = propagate(sys, 0.0, 2.0 * math.pi, rtol, atol, checkpoints)
    if residual > 10.0 * residual_budget:
        raise ToleranceNotMetError(
            f"symplectic residual {residual:.3e} exceeds 10 x {residual_budget:.1e}")
    eigenvalues = _sorted_eigenvalues(M)
    return MonodromyResult(
        system=sys, matrix=M, eigenvalues=eigenvalues, residual=residual,
        classification=classify(eigenvalues, circle_tol),
        hyperbolic_pairs=hyperbolic_pair_count(eigenvalues, circle_tol))


def kernel_dimension(M: np.ndarray, omega: complex = 1.0, tol: float = 1e-6) -> int:
    """dim ker(M - omega I) by singular value thresholding."""
    sv = np.linalg.svd(M - omega * np.eye(M.shape[0]), compute_uv=False)
    return int(np.sum(sv <= tol * max(1.0, sv[0])))


def autonomous_quartics(u: float):
    """Coefficient pairs (a, b) of lambda^4 + a lambda^2 + b for both blocks."""
    p1, p2 = phi(u)
    q1, q2 = psi(u)
    return (4.0 - p1 - p2, p1 * p2), (4.0 - q1 - q2, q1 * q2)


@dataclass(frozen=True)
class AutonomousSpectrum:
    u: float
    xi_roots: np.ndarray  # 4 complex
    eta_roots: np.ndarray
    xi_coeffs: tuple
    eta_coeffs: tuple


def autonomous_spectrum(u: float) -> AutonomousSpectrum:
    """Closed-form eigenvalues of the circular (e = 0) blocks.

    The characteristic polynomials are biquadratic; solving the quadratic in
    lambda^2 and taking both square roots gives the four eigenvalues of each
    block.  Their discriminants are negative throughout the admissible u
    interval, so all roots leave the imaginary axis.
    """
    def roots(a: float, b: float) -> np.ndarray:
        disc = complex(a * a - 4.0 * b)
        z = (-a + np.sqrt(disc)) / 2.0
        w = (-a - np.sqrt(disc)) / 2.0
        out = np.array([np.sqrt(z), -np.sqrt(z), np.sqrt(w), -np.sqrt(w)])
        return out[np.lexsort((out.imag, out.real))]

    (a2, b2), (a3, b3) = autonomous_quartics(u)
    return AutonomousSpectrum(u=u, xi_roots=roots(a2, b2), eta_roots=roots(a3, b3),
                              xi_coeffs=(a2, b2), eta_coeffs=(a3, b3))


def symplectic_sum(*matrices: np.ndarray) -> np.ndarray:
    """Interleaved direct sum preserving (momenta, positions) ordering.

    Each factor acts on (p_i, q_i); the result acts on
    (p_1, .., p_k, q_1, .., q_k) and is symplectic when the factors are.
    """
    halves = []
    for M in matrices:
        if M.shape[0] % 2:
            raise ValueError("symplectic factors must have even dimension")
        halves.append(M.shape[0] // 2)
    total = sum(halves)
    out = np.zeros((2 * total, 2 * total))
    offset = 0
    for M, h in zip(matrices, halves):
        rows = list(range(offset, offset + h)) + list(range(total + offset, total + offset + h))
        out[np.ix_(rows, rows)] = M
        offset += h
    return out


def spectral_mismatch(a: np.ndarray, b: np.ndarray) -> float:
    """Worst matched distance between two eigenvalue multisets."""
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@dataclass(frozen=True)
class SymmetryReport:
    """Numerical check of the u <-> 1/u congruence of the reduced blocks."""

    u: float
    e: float
    conjugation_residual: float  # |gamma_{1/u} - J4^{-1} gamma_u J4|
    eta_residual: float          # |eta_u(2pi) - eta_{1/u}(2pi)|
    xi_eigen_mismatch: float
    coefficient_residual: float  # coefficient-level u <-> 1/u identities


def symmetry_check(u: float, e: float, rtol: float = DEFAULT_RTOL,
                   atol: float = DEFAULT_ATOL) -> SymmetryReport:
    """Verify gamma_{1/u,e}(2pi) = J4^{-1} gamma_{u,e}(2pi) J4 and the eta identity."""
    J4 = np.kron(np.eye(2), J2)
    xi_u = fundamental_solution(LinearSystem("xi", u, e), rtol, atol)
    xi_inv = fundamental_solution(LinearSystem("xi", 1.0 / u, e), rtol, atol)
    eta_u = fundamental_solution(LinearSystem("eta", u, e), rtol, atol)
    eta_inv = fundamental_solution(LinearSystem("eta", 1.0 / u, e), rtol, atol)

    conj = np.linalg.solve(J4, xi_u.matrix @ J4)
    p = phi(u) + psi(u)
    q = phi(1.0 / u)[::-1] + psi(1.0 / u)
    coeff_res = max(abs(x - y) for x, y in zip(p, q))
    return SymmetryReport(
        u=u, e=e,
        conjugation_residual=float(np.max(np.abs(xi_inv.matrix - conj))),
        eta_residual=float(np.max(np.abs(eta_u.matrix - eta_inv.matrix))),
        xi_eigen_mismatch=spectral_mismatch(xi_u.eigenvalues, xi_inv.eigenvalues),
        coefficient_residual=coeff_res)
