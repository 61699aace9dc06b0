"""omega-Morse indices of the reduced second-order operators.

The operators act on 2-vector functions over [0, 2*pi] with boundary
condition y(2*pi) = omega * y(0), omega = exp(2*pi*i*rho) on the unit
circle.  All three families share the shape

    -d^2/dt^2 - 1 + [c I + d S(t)] / (2 (1 + e cos t)),

with S(t) = [[cos 2t, sin 2t], [sin 2t, -cos 2t]] and coefficient pairs
(c, d) = (phi1+phi2, phi1-phi2), (psi1+psi2, psi1-psi2), or (3, sqrt(9-b)).

Discretization is Fourier-Galerkin on the basis e^{i(k+rho)t} (x) C^2,
k = -N..N; the rho shift embeds the boundary condition in the exponents so
the assembled matrix stays exactly Hermitian.  Multiplication by the
1/(1+e cos t) kernel couples modes through its Fourier coefficients (a
geometric sequence, computed by FFT); the S(t) factor shifts modes by +-2
through the constant matrix P = [[1, -i], [-i, -1]] and its conjugate,
since S(t) = (e^{2it} P + e^{-2it} conj(P)) / 2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .central_config import DomainError, _check_shape_param
from .reduced_coeffs import phi, psi

P_MATRIX = np.array([[1.0, -1.0j], [-1.0j, -1.0]])

FAMILIES = ("scriptA", "scriptB", "Abeta")

DEFAULT_TRUNCATION = 64
ZERO_TOL = 1e-8


class TruncationError(RuntimeError):
    """Index counts failed to stabilize under repeated doubling of N."""


@dataclass(frozen=True)
class OperatorSpec:
    """One operator family member: scriptA(u,e), scriptB(u,e) or Abeta(beta,e)."""

    family: str
    e: float
    u: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family={self.family!r} not one of {FAMILIES}")
        if not (0.0 <= self.e < 1.0):
            raise DomainError(f"eccentricity e={self.e!r} outside [0, 1)")
        if self.family == "Abeta":
            if self.beta is None or not (0.0 <= self.beta <= 9.0):
                raise DomainError(f"beta={self.beta!r} outside [0, 9]")
        else:
            if self.u is None:
                raise DomainError(f"{self.family} requires the shape parameter u")
            _check_shape_param(self.u)


def coefficient_pair(spec: OperatorSpec) -> tuple[float, float]:
    """(c, d) with potential term [c I + d S(t)] / (2 (1 + e cos t))."""
    if spec.family == "scriptA":
        p1, p2 = phi(spec.u)
        return (p1 + p2, p1 - p2)
    if spec.family == "scriptB":
        q1, q2 = psi(spec.u)
        return (q1 + q2, q1 - q2)
    return (3.0, math.sqrt(9.0 - spec.beta))


def operator_profile(spec: OperatorSpec, t: float) -> np.ndarray:
    """Value of the 2x2 potential coefficient at time t (without the -d^2 - 1 part)."""
    c, d = coefficient_pair(spec)
    s2, c2 = math.sin(2.0 * t), math.cos(2.0 * t)
    S = np.array([[c2, s2], [s2, -c2]])
    return (c * np.eye(2) + d * S) / (2.0 * (1.0 + spec.e * math.cos(t)))


def kernel_fourier_coefficients(e: float, kmax: int) -> np.ndarray:
    """Fourier coefficients c_0..c_kmax of 1/(1 + e cos t).

    c_k = (1/2pi) int e^{-ikt}/(1+e cos t) dt, real and even in k; computed
    by FFT on a uniform grid fine enough that aliasing is negligible (the
    coefficients decay geometrically with ratio (sqrt(1-e^2)-1)/e).
    """
    if not (0.0 <= e < 1.0):
        raise DomainError(f"eccentricity e={e!r} outside [0, 1)")
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    n = 1 << max(12, (8 * (kmax + 1) - 1).bit_length())
    t = 2.0 * math.pi * np.arange(n) / n
    vals = 1.0 / (1.0 + e * np.cos(t))
    coeffs = np.fft.rfft(vals).real / n
    return coeffs[:kmax + 1]


def omega_point(rho: float) -> complex:
    return cmath.exp(2.0j * math.pi * rho)


def assemble(spec: OperatorSpec, rho: float, n_modes: int) -> np.ndarray:
    """Hermitian Galerkin matrix of size 2(2N+1) for boundary twist rho."""
    if n_modes < 8:
        raise ValueError("n_modes must be at least 8")
    if not (0.0 <= rho < 1.0):
        raise ValueError(f"rho={rho!r} outside [0, 1)")
    c, d = coefficient_pair(spec)
    N = n_modes
    k = np.arange(-N, N + 1)
    f = kernel_fourier_coefficients(spec.e, 2 * N + 4)

    diff = k[:, None] - k[None, :]
    F0 = f[np.abs(diff)]
    Fm = f[np.abs(diff - 2)]
    Fp = f[np.abs(diff + 2)]

    H = np.kron(np.diag((k + rho) ** 2 - 1.0).astype(complex), np.eye(2))
    H += np.kron(0.5 * c * F0, np.eye(2)).astype(complex)
    H += 0.25 * d * (np.kron(Fm, P_MATRIX) + np.kron(Fp, P_MATRIX.conj()))
    return H


@dataclass(frozen=True)
class IndexResult:
    spec: OperatorSpec
    rho: float
    omega: complex
    morse_index: int
    nullity: int
    min_eigenvalue: float
    truncation: int
    converged: bool


def _counts(spec: OperatorSpec, rho: float, n_modes: int, zero_tol: float):
    w = np.linalg.eigvalsh(assemble(spec, rho, n_modes))
    scale = max(1.0, float(np.abs(w).max()))
    neg = int(np.sum(w < -zero_tol * scale))
    null = int(np.sum(np.abs(w) <= zero_tol * scale))
    return neg, null, float(w[0])


def default_truncation(e: float, base: int = DEFAULT_TRUNCATION) -> int:
    """Truncation grows like 1/(1-e) once the kernel decay slows (e > 0.8)."""
    # the small shift keeps exact factor boundaries from rounding up
    return int(math.ceil(base * max(1.0, 0.2 / (1.0 - e)) - 1e-9))


def morse_index(spec: OperatorSpec, rho: float = 0.0,
                n_modes: int | None = None, zero_tol: float = ZERO_TOL,
                strict: bool = True) -> IndexResult:
    """Morse index and nullity, gated on agreement between N and 2N.

    On disagreement the truncation is doubled once more (2N vs 4N); a
    persistent mismatch raises TruncationError (or returns converged=False
    when strict is off).
    """
    if n_modes is None:
        n_modes = default_truncation(spec.e)
    n = n_modes
    neg, null, lo = _counts(spec, rho, n, zero_tol)
    for _ in range(2):
        neg2, null2, lo2 = _counts(spec, rho, 2 * n, zero_tol)
        if (neg, null) == (neg2, null2):
            return IndexResult(spec=spec, rho=rho, omega=omega_point(rho),
                               morse_index=neg, nullity=null, min_eigenvalue=lo2,
                               truncation=n, converged=True)
        neg, null, lo = neg2, null2, lo2
        n *= 2
    if strict:
        raise TruncationError(
            f"index counts not stable up to N={2 * n} for {spec}, rho={rho}")
    return IndexResult(spec=spec, rho=rho, omega=omega_point(rho),
                       morse_index=neg, nullity=null, min_eigenvalue=lo,
                       truncation=n, converged=False)


def positivity_scan(specs, eccentricities=None, rhos=(0.0, 0.5),
                    n_modes: int | None = None) -> list[IndexResult]:
    """Index results over a (spec, e, rho) grid; callers inspect min_eigenvalue.

    `specs` may contain OperatorSpec templates; when `eccentricities` is
    given, each template is re-instantiated at each eccentricity.
    """
    results = []
    for spec in specs:
        es = [spec.e] if eccentricities is None else eccentricities
        for e in es:
            s = OperatorSpec(spec.family, e, u=spec.u, beta=spec.beta)
            for rho in rhos:
                results.append(morse_index(s, rho, n_modes))
    return results
