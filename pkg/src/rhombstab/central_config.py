"""Rhombus central configurations of the planar four-body problem.

Bodies 1 and 3 sit on the vertical diagonal and carry mass m(u); bodies 2
and 4 sit on the horizontal diagonal with unit mass.  The shape parameter u
is the half-diagonal ratio, admissible on [1/sqrt(3), sqrt(3)].  At the right
endpoint m -> 0 and at the left endpoint m -> +inf, so constructions that
need both masses finite and positive reject the endpoints.

Everything here is a pure function of u; positions are normalized so that
sum_i m_i a_i = 0 and sum_i m_i |a_i|^2 = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

U_MIN = 1.0 / math.sqrt(3.0)
U_MAX = math.sqrt(3.0)

# Window around the interval endpoints treated as "exactly the endpoint".
ENDPOINT_TOL = 1e-12

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])
I2 = np.eye(2)


class DomainError(ValueError):
    """Parameter outside its admissible interval."""


class SingularConfigurationError(DomainError):
    """Configuration degenerates (a mass vanishes or diverges)."""


class StepSizeError(ValueError):
    """Invalid finite-difference step."""


def _check_shape_param(u: float) -> None:
    if not (U_MIN - ENDPOINT_TOL <= u <= U_MAX + ENDPOINT_TOL):
        raise DomainError(f"shape parameter u={u!r} outside [{U_MIN}, {U_MAX}]")


def mass_ratio(u: float) -> float:
    """Mass m(u) of the diagonal pair relative to the unit pair.

    m(u) = (8u^3 - u^3 (1+u^2)^{3/2}) / (8u^3 - (1+u^2)^{3/2}).
    Satisfies m(1) = 1 and m(u) m(1/u) = 1; vanishes at u = sqrt(3) and
    diverges at u = 1/sqrt(3), where the denominator changes sign.
    """
    _check_shape_param(u)
    if abs(u - U_MIN) <= ENDPOINT_TOL:
        return math.inf
    if abs(u - U_MAX) <= ENDPOINT_TOL:
        return 0.0
    s3 = (1.0 + u * u) ** 1.5
    return (8.0 * u**3 - u**3 * s3) / (8.0 * u**3 - s3)


@dataclass(frozen=True)
class CentralConfiguration:
    """Rhombus central configuration at shape u, normalized to unit inertia."""

    u: float
    m: float
    alpha: float
    mu_potential: float
    positions: np.ndarray  # (4, 2)
    masses: np.ndarray  # (4,)


def build_configuration(u: float) -> CentralConfiguration:
    """Positions a_1..a_4 = ((0,u), (1,0), (0,-u), (-1,0)) / alpha and mu = U(a)."""
    _check_shape_param(u)
    if abs(u - U_MIN) <= ENDPOINT_TOL or abs(u - U_MAX) <= ENDPOINT_TOL:
        raise SingularConfigurationError(
            f"u={u!r}: a mass vanishes or diverges at the interval endpoints")
    m = mass_ratio(u)
    alpha = math.sqrt(2.0 * m * u * u + 2.0)
    s = math.sqrt(1.0 + u * u)
    mu = 4.0 * m * alpha / s + alpha * m * m / (2.0 * u) + alpha / 2.0
    positions = np.array([[0.0, u], [1.0, 0.0], [0.0, -u], [-1.0, 0.0]]) / alpha
    masses = np.array([m, 1.0, m, 1.0])
    return CentralConfiguration(u=u, m=m, alpha=alpha, mu_potential=mu,
                                positions=positions, masses=masses)


def pair_potential(positions: np.ndarray, masses: np.ndarray) -> float:
    """Newtonian potential U = sum_{i<j} m_i m_j / |q_i - q_j|."""
    total = 0.0
    for i, j in combinations(range(len(masses)), 2):
        total += masses[i] * masses[j] / np.linalg.norm(positions[i] - positions[j])
    return total


def potential_gradient(positions: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """dU/dq_i, shape (n, 2)."""
    n = len(masses)
    grad = np.zeros((n, 2))
    for i, j in combinations(range(n), 2):
        d = positions[i] - positions[j]
        pull = masses[i] * masses[j] * d / np.linalg.norm(d) ** 3
        grad[i] -= pull
        grad[j] += pull
    return grad


def central_config_residual(cfg: CentralConfiguration) -> float:
    """max_i |dU/dq_i + mu m_i a_i|; zero at an exact central configuration."""
    grad = potential_gradient(cfg.positions, cfg.masses)
    res = grad + cfg.mu_potential * cfg.masses[:, None] * cfg.positions
    return float(np.max(np.linalg.norm(res, axis=1)))


def hessian_blocks(u: float) -> np.ndarray:
    """Blocks B_ij = d2U/dq_i dq_j of the potential at the configuration.

    Returns a (4, 4, 2, 2) array.  Off-diagonal blocks are the closed forms
    (each 2x2 symmetric and B_ij = B_ji); diagonal blocks come from the
    translation-invariance identity B_ii = -sum_{j != i} B_ij.
    """
    cfg = build_configuration(u)
    m, alpha = cfg.m, cfg.alpha
    a3 = alpha**3
    s5 = (1.0 + u * u) ** 2.5
    adjacent = a3 * m / s5 * np.array([[u * u - 2.0, 3.0 * u],
                                       [3.0 * u, 1.0 - 2.0 * u * u]])
    adjacent_flip = adjacent * np.array([[1.0, -1.0], [-1.0, 1.0]])
    vertical = a3 * m * m / (8.0 * u**3) * np.diag([1.0, -2.0])
    horizontal = a3 / 8.0 * np.diag([-2.0, 1.0])

    blocks = np.zeros((4, 4, 2, 2))
    # Neighbouring sides: (1,2), (2,3) paired with (3,4), (4,1) by symmetry.
    for i, j in ((0, 1), (2, 3)):
        blocks[i, j] = blocks[j, i] = adjacent
    for i, j in ((0, 3), (1, 2)):
        blocks[i, j] = blocks[j, i] = adjacent_flip
    blocks[0, 2] = blocks[2, 0] = vertical
    blocks[1, 3] = blocks[3, 1] = horizontal
    for i in range(4):
        blocks[i, i] = -sum(blocks[i, j] for j in range(4) if j != i)
    return blocks


def hessian_matrix(blocks: np.ndarray) -> np.ndarray:
    """Flatten a (4,4,2,2) block array into the 8x8 Hessian."""
    return blocks.transpose(0, 2, 1, 3).reshape(8, 8)


def _column_blocks(u: float) -> np.ndarray:
    """The 2x2 blocks A_{ik} of the reduction matrix, shape (4, 4, 2, 2).

    Column pairs correspond to the coordinates (g, z, w3, w4).  The g column
    carries the 1/sqrt(2m+2) normalization that makes A^T M A = I exact.
    """
    m = mass_ratio(u)
    if not (0.0 < m < math.inf):
        raise SingularConfigurationError(
            f"u={u!r}: reduction matrix undefined where m(u) is 0 or infinite")
    alpha = math.sqrt(2.0 * m * u * u + 2.0)
    cg = 1.0 / math.sqrt(2.0 * m + 2.0)
    c3a = -1.0 / math.sqrt(2.0 * m * m + 2.0 * m)
    c3b = math.sqrt(m / (2.0 * m + 2.0))
    c4 = 1.0 / (math.sqrt(m) * alpha)
    d4 = u * math.sqrt(m) / alpha

    cols = np.zeros((4, 4, 2, 2))
    for i in range(4):
        cols[i, 0] = cg * I2
    cols[0, 1] = (u / alpha) * J2
    cols[1, 1] = (1.0 / alpha) * I2
    cols[2, 1] = -(u / alpha) * J2
    cols[3, 1] = -(1.0 / alpha) * I2
    cols[0, 2] = cols[2, 2] = c3a * I2
    cols[1, 2] = cols[3, 2] = c3b * I2
    cols[0, 3] = -c4 * I2
    cols[1, 3] = -d4 * J2
    cols[2, 3] = c4 * I2
    cols[3, 3] = d4 * J2
    return cols


@dataclass(frozen=True)
class ReductionMatrix:
    """Coordinate change decoupling (g, z, w3, w4) from the body coordinates."""

    u: float
    A: np.ndarray  # (8, 8)
    mass_matrix: np.ndarray  # (8, 8) diagonal

    def orthonormality_residual(self) -> float:
        return float(np.max(np.abs(self.A.T @ self.mass_matrix @ self.A - np.eye(8))))

    def commutation_residual(self) -> float:
        jt = np.kron(np.eye(4), J2)
        return float(np.max(np.abs(jt @ self.A - self.A @ jt)))


def reduction_matrix(u: float) -> ReductionMatrix:
    cols = _column_blocks(u)
    A = cols.transpose(0, 2, 1, 3).reshape(8, 8)
    m = mass_ratio(u)
    mass_matrix = np.diag(np.repeat([m, 1.0, m, 1.0], 2))
    return ReductionMatrix(u=u, A=A, mass_matrix=mass_matrix)


def _reduced_gradient(u: float):
    """Gradient of U restricted to the (z, w3, w4) coordinates.

    The restriction composes the pair potential with q_i = sum_k A_{ik} x_k
    over the non-translation columns; only elementary calculus on that
    composition is used here, so the result is an oracle independent of the
    closed-form Hessian blocks.
    """
    cols = _column_blocks(u)
    m = mass_ratio(u)
    masses = (m, 1.0, m, 1.0)
    pairs = []
    for i, j in combinations(range(4), 2):
        diff = [cols[i, k] - cols[j, k] for k in (1, 2, 3)]
        pairs.append((masses[i] * masses[j], diff))

    def gradient(x: np.ndarray) -> np.ndarray:
        parts = x.reshape(3, 2)
        grad = np.zeros((3, 2))
        for mm, diff in pairs:
            v = sum(diff[k] @ parts[k] for k in range(3))
            scale = mm / np.dot(v, v) ** 1.5
            for k in range(3):
                grad[k] -= scale * (diff[k].T @ v)
        return grad.ravel()

    return gradient


def reduced_hessian_oracle(u: float, h: float = 1e-5) -> np.ndarray:
    """6x6 Hessian of the reduced potential at xi0 = (1, 0, 0, 0, 0, 0).

    Central differences of the analytic reduced gradient, Richardson
    extrapolated over steps h and h/2.  The three off-diagonal 2x2 blocks of
    the result vanish for a central configuration; the diagonal blocks are
    mu*diag(2,-1), mu*diag(phi1-1, phi2-1), mu*diag(psi1-1, psi2-1).
    """
    if not (0.0 < h <= 1e-4):
        raise StepSizeError(f"step h={h!r} must lie in (0, 1e-4]")
    gradient = _reduced_gradient(u)
    x0 = np.zeros(6)
    x0[0] = 1.0

    def jac(step: float) -> np.ndarray:
        cols = []
        for k in range(6):
            dx = np.zeros(6)
            dx[k] = step
            cols.append((gradient(x0 + dx) - gradient(x0 - dx)) / (2.0 * step))
        return np.column_stack(cols)

    return (4.0 * jac(h / 2.0) - jac(h)) / 3.0
