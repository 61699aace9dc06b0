"""Scalar coefficients of the reduced linearized systems.

phi1, phi2 drive the xi block and psi1, psi2 the eta block; all four are
smooth functions of the shape parameter u through m(u), alpha(u), mu(u).
The endpoint values are hard-wired to the limits {3/4, 9/4}: the raw
formulas stay finite there but lose digits as m(u) diverges at 1/sqrt(3).

Derivatives in u are analytic chain-rule expressions (cross-checked against
finite differences in the tests); the critical shapes u1 (where phi2 - phi1
is stationary) and u3 (where psi1 = psi2) come from bracketed Brent solves
on those derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .central_config import (U_MAX, U_MIN, ENDPOINT_TOL, DomainError,
                             _check_shape_param, mass_ratio)

# Limit values of (phi1, phi2) at u = sqrt(3); psi matches at 1/sqrt(3).
LIMIT_LOW = 0.75
LIMIT_HIGH = 2.25

# Positivity thresholds for the comparison operator A(beta, e), consumed as
# constants: the analytic bound covers e below these values; beyond them
# positivity is checked numerically only.
E_STAR_27_4 = 0.4454
E_STAR_BETA1 = 0.4435


def _at_endpoint(u: float) -> str | None:
    if abs(u - U_MIN) <= ENDPOINT_TOL:
        return "low"
    if abs(u - U_MAX) <= ENDPOINT_TOL:
        return "high"
    return None


def _base_quantities(u: float):
    """m, alpha, mu and the shared ratio g = 2(m+1)alpha^3/(mu s^5)."""
    m = mass_ratio(u)
    alpha = math.sqrt(2.0 * m * u * u + 2.0)
    s = math.sqrt(1.0 + u * u)
    mu = 4.0 * m * alpha / s + alpha * m * m / (2.0 * u) + alpha / 2.0
    g = 2.0 * (m + 1.0) * alpha**3 / (mu * s**5)
    return m, alpha, mu, s, g


def phi(u: float) -> tuple[float, float]:
    """Coefficients (phi1, phi2) of the xi block."""
    _check_shape_param(u)
    end = _at_endpoint(u)
    if end == "low":
        return (LIMIT_HIGH, LIMIT_LOW)
    if end == "high":
        return (LIMIT_LOW, LIMIT_HIGH)
    _, _, _, _, g = _base_quantities(u)
    return (1.0 + g * (2.0 - u * u), 1.0 + g * (2.0 * u * u - 1.0))


def psi(u: float) -> tuple[float, float]:
    """Coefficients (psi1, psi2) of the eta block; psi1 + psi2 = 3."""
    _check_shape_param(u)
    end = _at_endpoint(u)
    if end is not None:
        # psi is u <-> 1/u symmetric, same pair at both endpoints.
        return (LIMIT_LOW, LIMIT_HIGH)
    m, alpha, mu, s, _ = _base_quantities(u)
    h = 4.0 * alpha / mu
    s5 = s**5
    n1 = 2.0 * m * m * u**4 + (6.0 * m - m * m - 1.0) * u * u + 2.0
    n2 = -m * m * u**4 + (2.0 * m * m - 6.0 * m + 2.0) * u * u - 1.0
    q1 = n1 / s5 - (m / 8.0) * (u * u + u**-3)
    q2 = n2 / s5 + (m / 4.0) * (u * u + u**-3)
    return (1.0 + h * q1, 1.0 + h * q2)


@dataclass(frozen=True)
class ReducedCoefficients:
    u: float
    phi1: float
    phi2: float
    psi1: float
    psi2: float
    dphi_diff: float  # d(phi2 - phi1)/du
    dpsi_diff: float  # d(psi1 - psi2)/du


def coefficients(u: float) -> ReducedCoefficients:
    p1, p2 = phi(u)
    q1, q2 = psi(u)
    der = coefficient_derivatives(u)
    return ReducedCoefficients(u=u, phi1=p1, phi2=p2, psi1=q1, psi2=q2,
                               dphi_diff=der.dphi_diff, dpsi_diff=der.dpsi_diff)


def _check_eccentricity(e: float, limit: float = 1.0) -> None:
    if not (0.0 <= e < limit):
        raise DomainError(f"eccentricity e={e!r} outside [0, {limit})")


def coefficient_matrices(u: float, e: float, t: float):
    """(K, T) = (diag(phi1, phi2), diag(psi1, psi2)) / (1 + e cos t)."""
    _check_eccentricity(e)
    p1, p2 = phi(u)
    q1, q2 = psi(u)
    denom = 1.0 + e * math.cos(t)
    return np.diag([p1, p2]) / denom, np.diag([q1, q2]) / denom


def rotation(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]])


def s_matrix(t: float) -> np.ndarray:
    c, s = math.cos(2.0 * t), math.sin(2.0 * t)
    return np.array([[c, s], [s, -c]])


def rotated_form(u: float, e: float, t: float, which: str = "A") -> np.ndarray:
    """R(t) K R(t)^T (which="A") or R(t) T R(t)^T (which="B").

    Equals [(c1+c2) I + (c1-c2) S(t)] / (2 (1 + e cos t)) for the diagonal
    entries (c1, c2) of the corresponding coefficient matrix; the tests pin
    the rotation convention through that identity.
    """
    if which not in ("A", "B"):
        raise ValueError(f"which={which!r} must be 'A' or 'B'")
    K, T = coefficient_matrices(u, e, t)
    R = rotation(t)
    return R @ (K if which == "A" else T) @ R.T


@dataclass(frozen=True)
class CoefficientDerivatives:
    """u-derivatives of the coefficient combinations used for root finding."""

    u: float
    dphi1: float
    dphi2: float
    dpsi1: float
    dpsi2: float

    @property
    def dphi_diff(self) -> float:
        return self.dphi2 - self.dphi1

    @property
    def dpsi_diff(self) -> float:
        return self.dpsi1 - self.dpsi2

    @property
    def dphi_sum_defect(self) -> float:
        """d(4 - phi1 - phi2)/du."""
        return -(self.dphi1 + self.dphi2)


def coefficient_derivatives(u: float) -> CoefficientDerivatives:
    """Analytic d(phi_i)/du, d(psi_i)/du by the chain rule through m, alpha, mu.

    Valid on (1/sqrt(3), sqrt(3)]; the left endpoint is excluded because m
    and every derived quantity diverge there.
    """
    _check_shape_param(u)
    if _at_endpoint(u) == "low":
        raise DomainError("derivatives diverge at u = 1/sqrt(3)")

    u2 = u * u
    s2 = 1.0 + u2
    s = math.sqrt(s2)
    s3 = s2 * s
    s5 = s2 * s2 * s

    num_m = u**3 * (8.0 - s3)
    den_m = 8.0 * u**3 - s3
    m = num_m / den_m
    dnum = 24.0 * u2 - 3.0 * u2 * s3 - 3.0 * u**4 * s
    dden = 24.0 * u2 - 3.0 * u * s
    mp = (dnum * den_m - num_m * dden) / den_m**2

    alpha = math.sqrt(2.0 * m * u2 + 2.0)
    alphap = (mp * u2 + 2.0 * m * u) / alpha

    mu = 4.0 * m * alpha / s + alpha * m * m / (2.0 * u) + alpha / 2.0
    mup = (4.0 * (mp * alpha + m * alphap) / s - 4.0 * m * alpha * u / s3
           + (alphap * m * m + 2.0 * alpha * m * mp) / (2.0 * u)
           - alpha * m * m / (2.0 * u2) + alphap / 2.0)

    g = 2.0 * (m + 1.0) * alpha**3 / (mu * s5)
    gp = g * (mp / (m + 1.0) + 3.0 * alphap / alpha - mup / mu - 5.0 * u / s2)
    dphi1 = gp * (2.0 - u2) - 2.0 * u * g
    dphi2 = gp * (2.0 * u2 - 1.0) + 4.0 * u * g

    h = 4.0 * alpha / mu
    hp = h * (alphap / alpha - mup / mu)
    n1 = 2.0 * m * m * u**4 + (6.0 * m - m * m - 1.0) * u2 + 2.0
    n1p = (4.0 * m * mp * u**4 + 8.0 * m * m * u**3
           + (6.0 * mp - 2.0 * m * mp) * u2 + 2.0 * u * (6.0 * m - m * m - 1.0))
    n2 = -m * m * u**4 + (2.0 * m * m - 6.0 * m + 2.0) * u2 - 1.0
    n2p = (-2.0 * m * mp * u**4 - 4.0 * m * m * u**3
           + (4.0 * m * mp - 6.0 * mp) * u2 + 2.0 * u * (2.0 * m * m - 6.0 * m + 2.0))
    q1 = n1 / s5 - (m / 8.0) * (u2 + u**-3)
    q1p = ((n1p - 5.0 * u * n1 / s2) / s5
           - (mp / 8.0) * (u2 + u**-3) - (m / 8.0) * (2.0 * u - 3.0 * u**-4))
    q2 = n2 / s5 + (m / 4.0) * (u2 + u**-3)
    q2p = ((n2p - 5.0 * u * n2 / s2) / s5
           + (mp / 4.0) * (u2 + u**-3) + (m / 4.0) * (2.0 * u - 3.0 * u**-4))
    dpsi1 = hp * q1 + h * q1p
    dpsi2 = hp * q2 + h * q2p

    return CoefficientDerivatives(u=u, dphi1=dphi1, dphi2=dphi2,
                                  dpsi1=dpsi1, dpsi2=dpsi2)


def derivative_products(u: float) -> tuple[float, float]:
    """(d(phi1 phi2)/du, d(psi1 psi2)/du)."""
    p1, p2 = phi(u)
    q1, q2 = psi(u)
    d = coefficient_derivatives(u)
    return (d.dphi1 * p2 + p1 * d.dphi2, d.dpsi1 * q2 + q1 * d.dpsi2)


@dataclass(frozen=True)
class CriticalParams:
    """Distinguished shapes of the coefficient family.

    u1: stationary point of phi2 - phi1 in (1/sqrt(3), 1); u2 = 1/u1.
    u3: crossing psi1 = psi2; u3_product_stationary: nearby stationary point
    of psi1*psi2 (reported separately, the two are distinct numbers).
    beta1 = 9 - (phi1(u1) - phi2(u1))^2 selects the comparison operator.
    """

    u1: float
    u2: float
    u3: float
    u3_product_stationary: float
    beta1: float
    phi_gap: float  # phi1(u1) - phi2(u1)
    phi_sum: float  # phi1(u1) + phi2(u1)
    e_star_27_4: float = E_STAR_27_4
    e_star_beta1: float = E_STAR_BETA1

    @property
    def u3_split(self) -> float:
        """Distance between the psi crossing and the psi-product stationary point."""
        return abs(self.u3 - self.u3_product_stationary)


class BracketingError(RuntimeError):
    """Root bracket does not straddle a sign change."""


def _brent(f, lo: float, hi: float, tol: float) -> float:
    if f(lo) * f(hi) > 0.0:
        raise BracketingError(f"no sign change of {f} on [{lo}, {hi}]")
    return float(brentq(f, lo, hi, xtol=tol, rtol=4.0 * np.finfo(float).eps))


def find_critical_params(tol: float = 1e-13) -> CriticalParams:
    """Locate u1, u2, u3, beta1 by bracketed root finding.

    Brackets follow the sign tables of the derivative functions:
    d(phi2-phi1)/du changes sign in (0.55, 0.65), psi1 - psi2 in (0.6, 0.7).
    """
    if tol < 1e-14:
        raise ValueError("tol below root-solver resolution")
    # The lower bracket end is clamped inside the open interval; the sign of
    # d(phi2-phi1)/du is constant left of u1, so any interior point works.
    lo = max(0.55, U_MIN + 1e-4)
    u1 = _brent(lambda v: coefficient_derivatives(v).dphi_diff, lo, 0.65, tol)
    u3 = _brent(lambda v: psi(v)[0] - psi(v)[1], 0.6, 0.7, tol)
    u3_bar = _brent(lambda v: derivative_products(v)[1], 0.6, 0.7, tol)
    p1, p2 = phi(u1)
    gap = p1 - p2
    return CriticalParams(u1=u1, u2=1.0 / u1, u3=u3, u3_product_stationary=u3_bar,
                          beta1=9.0 - gap * gap, phi_gap=gap, phi_sum=p1 + p2)
