"""Shared test oracles, deliberately independent of the library internals:

* ``min_eig_by_inertia`` — minimum eigenvalue of a Hermitian matrix by
  Sylvester-inertia bisection on LDL^H factorizations (no iterative
  eigensolver involved);
* ``rk4_path`` — classic fourth-order Runge-Kutta integration;
* ``qubit_rates_abc`` — qubit decay rates assembled from the three
  log-derivative combinations A, B, C;
* ``random_expression`` — random smooth expression strings, domain-safe on
  t in [0.05, 3.5].
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import ldl


def _count_eigs_below(m: np.ndarray, x: float) -> int:
    """Number of eigenvalues of Hermitian ``m`` strictly below ``x``."""
    shifted = m - x * np.eye(m.shape[0])
    _, d, _ = ldl(shifted, lower=True)
    count = 0
    i = 0
    n = d.shape[0]
    while i < n:
        if i + 1 < n and (d[i, i + 1] != 0 or d[i + 1, i] != 0):
            block = d[i : i + 2, i : i + 2]
            tr = float(block[0, 0].real + block[1, 1].real)
            det = float(
                (block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]).real
            )
            disc = max(tr * tr / 4.0 - det, 0.0)
            for ev in (tr / 2.0 - np.sqrt(disc), tr / 2.0 + np.sqrt(disc)):
                if ev < 0:
                    count += 1
            i += 2
        else:
            if d[i, i].real < 0:
                count += 1
            i += 1
    return count


def min_eig_by_inertia(m: np.ndarray, xtol: float = 1e-12) -> float:
    m = np.asarray(m)
    scale = float(np.abs(m).sum()) + 1.0
    lo, hi = -scale, scale
    # invariant: count(< lo) == 0, count(< hi) >= 1
    for _ in range(200):
        if hi - lo <= xtol * max(1.0, abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if _count_eigs_below(m, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def rk4_path(f, y0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Integrate y' = f(t, y) across ``times``; returns array (len(times), len(y0))."""
    y = np.array(y0, dtype=float)
    out = [y.copy()]
    for k in range(len(times) - 1):
        t, h = times[k], times[k + 1] - times[k]
        k1 = f(t, y)
        k2 = f(t + h / 2.0, y + h / 2.0 * k1)
        k3 = f(t + h / 2.0, y + h / 2.0 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out.append(y.copy())
    return np.asarray(out)


def qubit_rates_abc(lam: np.ndarray, dlam: np.ndarray) -> np.ndarray:
    """Qubit decay rates from the A, B, C log-derivative combinations.

    With A = -(ln lam_2)'/4, B = -(ln lam_1)'/4, C = -(ln lam_3)'/4:
    gamma_1 = A - B + C, gamma_2 = -A + B + C, gamma_3 = A + B - C.
    """
    a = -dlam[1] / lam[1] / 4.0
    b = -dlam[0] / lam[0] / 4.0
    c = -dlam[2] / lam[2] / 4.0
    return np.stack([a - b + c, -a + b + c, a + b - c])


def random_expression(rng: np.random.Generator, depth: int = 0) -> str:
    """A random smooth expression over t, finite (with finite derivative)
    for every t in [0.05, 3.5]."""
    a = rng.uniform(0.2, 2.5)
    b = rng.uniform(0.2, 2.5)
    if depth >= 2:
        leaves = [
            f"{a:.6f}*t",
            f"{a:.6f}",
            f"sin({b:.6f}*t)",
            f"cos({b:.6f}*t)",
            f"exp(-{b:.6f}*t)",
            f"ln(1 + {a:.6f}*t^2)",
            f"sqrt({a:.6f} + t^2)",
            f"t^{int(rng.integers(1, 4))}",
        ]
        return leaves[rng.integers(len(leaves))]
    u = random_expression(rng, depth + 1)
    v = random_expression(rng, depth + 1)
    forms = [
        f"({u}) + ({v})",
        f"({u}) - ({v})",
        f"({u}) * ({v})",
        f"({u}) / ({b:.6f} + t^2)",
        f"-({u})",
        f"({u})",
    ]
    return forms[rng.integers(len(forms))]
