"""Matrix-level channel checks: Choi matrices, superoperators, positivity.

Conventions
-----------
* vec() is column-stacking, so ``vec(A @ rho @ B) = (B.T kron A) vec(rho)``
  and a Kraus term ``K rho K+`` contributes ``conj(K) kron K`` to the
  superoperator.
* The Choi matrix uses the unnormalized maximally entangled vector
  ``|Omega> = sum_i |ii>``:  ``C = sum_ij E(E_ij) kron E_ij``.  Complete
  positivity of the map is positive semidefiniteness of ``C``; trace
  preservation is ``tr_1 C = identity``.
* Positivity checks diagonalize with a cyclic Jacobi eigensolver for
  Hermitian matrices written out below (converged to off-diagonal norm
  <= 1e-13), so the product code does not lean on the same eigensolver the
  tests use as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import mubgen
from .channelcore import MixtureSpec
from .mubgen import WeylSet

__all__ = [
    "PsdCheck",
    "ComposeCheck",
    "DensityCheck",
    "hermiticity_deviation",
    "hermitian_eigensystem",
    "psd_check",
    "check_density_matrix",
    "apply_channel",
    "superoperator",
    "choi",
    "choi_from_eigenvalues",
    "partial_trace_first",
    "compose_check",
]

_HERM_INPUT_TOL = 1e-10


@dataclass(frozen=True)
class PsdCheck:
    passed: bool
    min_eigenvalue: float
    tolerance: float


@dataclass(frozen=True)
class ComposeCheck:
    passed: bool
    deviation: float
    tolerance: float


@dataclass(frozen=True)
class DensityCheck:
    passed: bool
    hermiticity_deviation: float
    trace_deviation: float
    min_eigenvalue: float


def hermiticity_deviation(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.abs(m - m.conj().T).max())


# ---------------------------------------------------------------------------
# Cyclic Jacobi eigensolver for Hermitian matrices
# ---------------------------------------------------------------------------


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def hermitian_eigensystem(
    m: np.ndarray, off_tol: float = 1e-13, max_sweeps: int = 60
) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.

    Cyclic Jacobi: sweep all (p, q) pairs, each time applying the unitary
    plane rotation that zeroes A[p, q].  For the 2x2 Hermitian block
    [[a_pp, b*phase], [b*conj(phase), a_qq]] with b = |A[p,q]| the rotation is
    the real symmetric Schur rotation conjugated by diag(1, conj(phase)).
    Sweeps stop once the off-diagonal Frobenius norm is below ``off_tol``.
    """
    a = np.array(m, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    v = np.eye(n, dtype=complex)
    if n == 1:
        return a.real.diagonal().copy(), v
    for _ in range(max_sweeps):
        if _off_norm(a) <= off_tol:
            break
        _jacobi_sweep(a, v)
    if _off_norm(a) > off_tol:
        raise ArithmeticError(
            f"Jacobi sweeps did not converge to off-diagonal norm {off_tol:g}"
        )
    eigenvalues = a.diagonal().real.copy()
    order = np.argsort(eigenvalues)
    return eigenvalues[order], v[:, order]


def _jacobi_sweep(a: np.ndarray, v: np.ndarray) -> None:
    n = a.shape[0]
    for p in range(n - 1):
        for q in range(p + 1, n):
            apq = a[p, q]
            b = abs(apq)
            if b == 0.0:
                continue
            phase = apq / b
            app = a[p, p].real
            aqq = a[q, q].real
            tau = (aqq - app) / (2.0 * b)
            if tau >= 0:
                tan = 1.0 / (tau + np.hypot(1.0, tau))
            else:
                tan = -1.0 / (-tau + np.hypot(1.0, tau))
            c = 1.0 / np.sqrt(1.0 + tan * tan)
            s = tan * c
            # R[p,p]=c, R[p,q]=s, R[q,p]=-s*conj(phase), R[q,q]=c*conj(phase)
            col_p = a[:, p].copy()
            col_q = a[:, q].copy()
            a[:, p] = c * col_p - s * np.conj(phase) * col_q
            a[:, q] = s * col_p + c * np.conj(phase) * col_q
            row_p = a[p, :].copy()
            row_q = a[q, :].copy()
            a[p, :] = c * row_p - s * phase * row_q
            a[q, :] = s * row_p + c * phase * row_q
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp = v[:, p].copy()
            vq = v[:, q].copy()
            v[:, p] = c * vp - s * np.conj(phase) * vq
            v[:, q] = s * vp + c * np.conj(phase) * vq


def psd_check(m: np.ndarray, tol: float = 1e-10) -> PsdCheck:
    """Positive-semidefiniteness verdict: min eigenvalue >= -tol.

    Rejects inputs that are not Hermitian within 1e-10.
    """
    m = np.asarray(m, dtype=complex)
    dev = hermiticity_deviation(m)
    if dev > _HERM_INPUT_TOL:
        raise ValueError(f"matrix is not Hermitian (deviation {dev:g})")
    herm = 0.5 * (m + m.conj().T)
    eigenvalues, _ = hermitian_eigensystem(herm)
    min_eig = float(eigenvalues[0])
    return PsdCheck(passed=min_eig >= -tol, min_eigenvalue=min_eig, tolerance=tol)


def check_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-12,
    trace_tol: float = 1e-12,
    eig_floor: float = -1e-10,
) -> DensityCheck:
    rho = np.asarray(rho, dtype=complex)
    herm_dev = hermiticity_deviation(rho)
    trace_dev = abs(complex(np.trace(rho)) - 1.0)
    eigenvalues, _ = hermitian_eigensystem(0.5 * (rho + rho.conj().T))
    min_eig = float(eigenvalues[0])
    return DensityCheck(
        passed=herm_dev <= herm_tol and trace_dev <= trace_tol and min_eig >= eig_floor,
        hermiticity_deviation=herm_dev,
        trace_deviation=float(trace_dev),
        min_eigenvalue=min_eig,
    )


# ---------------------------------------------------------------------------
# Channel action, superoperator, Choi
# ---------------------------------------------------------------------------


def _weyl(spec_dim: int, weyl: Optional[WeylSet]) -> WeylSet:
    if weyl is None:
        return mubgen.weyl_set(spec_dim)
    if weyl.dimension != spec_dim:
        raise ValueError("Weyl set dimension does not match the mixture")
    return weyl


def _unitary_powers(weyl: WeylSet, basis: int) -> list[np.ndarray]:
    """[U^1, ..., U^(d-1)] for the 1-based basis label."""
    u = weyl.unitaries[basis - 1]
    powers = []
    acc = np.eye(weyl.dimension, dtype=complex)
    for _ in range(weyl.dimension - 1):
        acc = acc @ u
        powers.append(acc)
    return powers


def apply_channel(
    spec: MixtureSpec, t: float, rho: np.ndarray, weyl: Optional[WeylSet] = None
) -> np.ndarray:
    """Apply the mixture at time ``t`` to ``rho``.

    Trace and Hermiticity are preserved identically; the output is a valid
    state whenever every component's ``p(t)`` lies in [0, 1].
    """
    d = spec.dimension
    weyl = _weyl(d, weyl)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError(f"state must be {d}x{d}, got {rho.shape}")
    out = np.zeros_like(rho)
    for comp in spec.components:
        p = float(comp.channel.p.value(t))
        twirl = np.zeros_like(rho)
        for uk in _unitary_powers(weyl, comp.channel.basis):
            twirl += uk @ rho @ uk.conj().T
        out += comp.weight * ((1.0 - p) * rho + (p / (d - 1.0)) * twirl)
    return out


def superoperator(
    spec: MixtureSpec, t: float, weyl: Optional[WeylSet] = None
) -> np.ndarray:
    """Column-stacking superoperator matrix of the mixture at time ``t``."""
    d = spec.dimension
    weyl = _weyl(d, weyl)
    m = np.zeros((d * d, d * d), dtype=complex)
    eye = np.eye(d * d, dtype=complex)
    for comp in spec.components:
        p = float(comp.channel.p.value(t))
        term = np.zeros_like(m)
        for uk in _unitary_powers(weyl, comp.channel.basis):
            term += np.kron(uk.conj(), uk)
        m += comp.weight * ((1.0 - p) * eye + (p / (d - 1.0)) * term)
    return m


def choi(spec: MixtureSpec, t: float, weyl: Optional[WeylSet] = None) -> np.ndarray:
    """Choi matrix ``sum_ij E(E_ij) kron E_ij`` via the channel action on matrix units."""
    d = spec.dimension
    weyl = _weyl(d, weyl)
    c = np.zeros((d * d, d * d), dtype=complex)
    unit = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            unit[i, j] = 1.0
            c += np.kron(apply_channel(spec, t, unit, weyl), unit)
            unit[i, j] = 0.0
    return c


def choi_from_eigenvalues(weyl: WeylSet, label_eigenvalues) -> np.ndarray:
    """Choi matrix of the map with eigenvalue ``mu_beta`` on each ``U_beta^m``.

    The map fixes the identity component and scales the span of ``U_beta^m``
    (m = 1..d-1) by ``mu_beta``; this covers intermediate maps of mixtures,
    whose eigenbasis is the same Weyl operator basis.
    """
    d = weyl.dimension
    mu = np.asarray(label_eigenvalues, dtype=float)
    if mu.shape != (d + 1,):
        raise ValueError(f"expected {d + 1} label eigenvalues, got shape {mu.shape}")
    powers = [_unitary_powers(weyl, beta + 1) for beta in range(d + 1)]
    eye = np.eye(d, dtype=complex)
    c = np.zeros((d * d, d * d), dtype=complex)
    unit = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            unit[i, j] = 1.0
            # expand E_ij in {identity} U {U_beta^m} and rescale each piece
            out = (np.trace(unit) / d) * eye
            for beta in range(d + 1):
                for um in powers[beta]:
                    coeff = np.trace(um.conj().T @ unit) / d
                    out = out + mu[beta] * coeff * um
            c += np.kron(out, unit)
            unit[i, j] = 0.0
    return c


def partial_trace_first(c: np.ndarray, d: int) -> np.ndarray:
    """Trace out the first tensor factor of a ``d^2 x d^2`` matrix."""
    c = np.asarray(c)
    return np.einsum("aiaj->ij", c.reshape(d, d, d, d))


def compose_check(
    spec: MixtureSpec, s: float, t: float, tol: float = 1e-9,
    weyl: Optional[WeylSet] = None,
) -> ComposeCheck:
    """Max-norm deviation ``||M(s) M(t) - M(s+t)||_max`` of the superoperators."""
    weyl = _weyl(spec.dimension, weyl)
    ms = superoperator(spec, s, weyl)
    mt = superoperator(spec, t, weyl)
    mst = superoperator(spec, s + t, weyl)
    deviation = float(np.abs(ms @ mt - mst).max())
    return ComposeCheck(passed=deviation <= tol, deviation=deviation, tolerance=tol)
