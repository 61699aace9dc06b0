import math

import numpy as np
import pytest
from scipy.integrate import quad

from rhombstab.central_config import U_MIN, DomainError
from rhombstab.monodromy import LinearSystem, fundamental_solution, kernel_dimension
from rhombstab.reduced_coeffs import find_critical_params, rotated_form
from rhombstab.spectral_index import (
    P_MATRIX, OperatorSpec, TruncationError, assemble, coefficient_pair,
    default_truncation, kernel_fourier_coefficients, morse_index, omega_point,
    operator_profile, positivity_scan)


def test_kernel_coefficients_closed_form():
    # geometric sequence with ratio (sqrt(1-e^2)-1)/e starting at 1/sqrt(1-e^2)
    for e in (0.05, 0.3, 0.6, 0.9, 0.95):
        f = kernel_fourier_coefficients(e, 30)
        f0 = 1.0 / math.sqrt(1.0 - e * e)
        q = (math.sqrt(1.0 - e * e) - 1.0) / e
        assert np.abs(f - f0 * q ** np.arange(31)).max() < 1e-13


def test_kernel_coefficients_against_quadrature():
    for e, k in ((0.4, 0), (0.4, 3), (0.8, 5)):
        f = kernel_fourier_coefficients(e, 8)
        val, _ = quad(lambda t: math.cos(k * t) / (1.0 + e * math.cos(t)),
                      0.0, 2.0 * math.pi, limit=200)
        assert f[k] == pytest.approx(val / (2.0 * math.pi), abs=1e-12)


def test_kernel_degenerate_circle():
    f = kernel_fourier_coefficients(0.0, 6)
    assert f[0] == pytest.approx(1.0, abs=1e-14)
    assert np.abs(f[1:]).max() < 1e-14


def test_p_matrix_algebra():
    assert np.abs(P_MATRIX @ P_MATRIX).max() == 0.0
    assert np.abs(P_MATRIX.conj().T - P_MATRIX.conj()).max() == 0.0


def test_operator_profile_matches_rotated_coefficients():
    for u, e, t in ((0.7, 0.3, 0.5), (1.2, 0.8, 2.0)):
        prof = operator_profile(OperatorSpec("scriptA", e, u=u), t)
        assert np.abs(prof - rotated_form(u, e, t, which="A")).max() < 1e-13
        prof = operator_profile(OperatorSpec("scriptB", e, u=u), t)
        assert np.abs(prof - rotated_form(u, e, t, which="B")).max() < 1e-13


def test_assembly_exactly_hermitian():
    for fam, kw in (("scriptA", dict(u=0.8)), ("scriptB", dict(u=1.3)),
                    ("Abeta", dict(beta=5.0))):
        H = assemble(OperatorSpec(fam, 0.7, **kw), 0.25, 32)
        assert np.abs(H - H.conj().T).max() == 0.0


def _closed_spectrum(c, d, rho, N):
    """Exact truncated spectrum on the circle: the +-2 coupling pairs the
    two circular components of modes k and k+2 into 2x2 blocks."""
    vals = []
    for k in range(-N, N - 1):
        kap = k + 1.0 + rho
        mid = kap * kap + c / 2.0
        r = math.sqrt(4.0 * kap * kap + d * d / 4.0)
        vals += [mid - r, mid + r]
    for k in (-N, -N + 1, N - 1, N):
        vals.append((k + rho) ** 2 - 1.0 + c / 2.0)
    return np.sort(np.array(vals))


def test_circular_orbit_spectrum_closed_form():
    for fam, kw, rho in (("scriptA", dict(u=0.8), 0.0),
                         ("scriptB", dict(u=1.3), 0.5),
                         ("Abeta", dict(beta=27.0 / 4.0), 1.0 / 6.0)):
        spec = OperatorSpec(fam, 0.0, **kw)
        c, d = coefficient_pair(spec)
        N = 20
        w = np.linalg.eigvalsh(assemble(spec, rho, N))
        assert np.abs(w - _closed_spectrum(c, d, rho, N)).max() < 1e-10


def test_operator_family_identities():
    cp = find_critical_params()
    for e in (0.0, 0.5, 0.9):
        HA = assemble(OperatorSpec("scriptA", e, u=U_MIN), 0.5, 24)
        HB = assemble(OperatorSpec("Abeta", e, beta=27.0 / 4.0), 0.5, 24)
        assert np.abs(HA - HB).max() < 1e-10
        HC = assemble(OperatorSpec("scriptB", e, u=cp.u3), 0.0, 24)
        HD = assemble(OperatorSpec("Abeta", e, beta=9.0), 0.0, 24)
        assert np.abs(HC - HD).max() < 1e-10


def test_positivity_at_reference_operators():
    cp = find_critical_params()
    for e in (0.0, 0.6):
        for rho in (0.0, 0.5):
            for spec in (OperatorSpec("scriptA", e, u=1.0),
                         OperatorSpec("scriptB", e, u=cp.u3)):
                r = morse_index(spec, rho, n_modes=32)
                assert r.converged
                assert r.morse_index == 0
                assert r.nullity == 0
                assert r.min_eigenvalue > 0.0


def test_kepler_operator_nullity_matches_monodromy_kernel():
    """beta = 0 reproduces the radial-block operator, whose omega = 1
    kernel is the three-dimensional space forced by the Kepler orbit."""
    for e in (0.0, 0.3, 0.6):
        r = morse_index(OperatorSpec("Abeta", e, beta=0.0), rho=0.0)
        M = fundamental_solution(LinearSystem("kepler", e=e)).matrix
        assert r.nullity == kernel_dimension(M, omega=1.0) == 3
        assert r.morse_index == 0


def test_conjugation_symmetry_low_spectrum():
    spec = OperatorSpec("scriptA", 0.6, u=0.75)
    w1 = np.linalg.eigvalsh(assemble(spec, 1.0 / 6.0, 48))
    w2 = np.linalg.eigvalsh(assemble(spec, 5.0 / 6.0, 48))
    assert np.abs(w1[:40] - w2[:40]).max() < 1e-9


def test_truncation_independence():
    spec = OperatorSpec("scriptB", 0.44, u=0.9)
    a = morse_index(spec, 0.5, n_modes=16)
    b = morse_index(spec, 0.5, n_modes=48)
    assert (a.morse_index, a.nullity) == (b.morse_index, b.nullity)
    assert a.converged and b.converged


def test_default_truncation_scaling():
    assert default_truncation(0.0) == 64
    assert default_truncation(0.8) == 64
    assert default_truncation(0.9) == 128
    assert default_truncation(0.95) == 256


def test_positivity_scan_shape():
    results = positivity_scan([OperatorSpec("Abeta", 0.0, beta=27.0 / 4.0)],
                              eccentricities=(0.0, 0.3), rhos=(0.0, 0.5),
                              n_modes=24)
    assert len(results) == 4
    assert all(r.morse_index == 0 and r.min_eigenvalue > 0.0 for r in results)


def test_omega_point_values():
    assert omega_point(0.0) == pytest.approx(1.0)
    assert omega_point(0.5) == pytest.approx(-1.0)
    w = omega_point(1.0 / 6.0)
    assert w == pytest.approx(complex(math.cos(math.pi / 3.0), math.sin(math.pi / 3.0)))


def test_spec_validation():
    with pytest.raises(DomainError):
        OperatorSpec("Abeta", 0.2, beta=9.5)
    with pytest.raises(DomainError):
        OperatorSpec("scriptA", 0.2)
    with pytest.raises(DomainError):
        OperatorSpec("scriptA", 1.0, u=0.8)
    with pytest.raises(ValueError):
        OperatorSpec("other", 0.2, u=0.8)
    with pytest.raises(ValueError):
        assemble(OperatorSpec("Abeta", 0.2, beta=1.0), 1.5, 16)
