"""Elementary symmetric function algebra for curvature eigenvalue tuples.

Eigenvalue tuples are 1-D float arrays (length n = hypersurface dimension,
small: n <= 6 in practice).  Symmetric matrices are (n, n) float arrays.
The normalized functions E_m = sigma_m / C(n, m) are what the integral
identities consume; sigma_m is exposed for cone membership tests and for
brute-force oracles.

Conventions: sigma_0 = E_0 = 1, and sigma_m = E_m = 0 whenever m > n.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import GardingConeError

__all__ = [
    "sigma_m",
    "e_m",
    "e_m_values",
    "e_m_matrix",
    "d_e_m",
    "jacobi_eigenvalues",
    "cone_member",
    "newton_maclaurin_deficit",
]


def _as_tuple(values) -> np.ndarray:
    lam = np.asarray(values, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("eigenvalue tuple must be a non-empty 1-D array")
    if not np.all(np.isfinite(lam)):
        raise ValueError("eigenvalue tuple contains non-finite entries")
    return lam


def _as_symmetric(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix must be exactly symmetric")
    return a


def sigma_m(values, m: int) -> float:
    """m-th elementary symmetric polynomial of an eigenvalue tuple."""
    lam = _as_tuple(values)
    if m < 0:
        raise ValueError(f"order m must be non-negative, got {m}")
    n = lam.size
    if m == 0:
        return 1.0
    if m > n:
        return 0.0
    # Prefix recursion: after consuming lam[i], e[j] holds sigma_j of the prefix.
    e = np.zeros(m + 1)
    e[0] = 1.0
    for i in range(n):
        for j in range(min(i + 1, m), 0, -1):
            e[j] += lam[i] * e[j - 1]
    return float(e[m])


def e_m(values, m: int) -> float:
    """Normalized symmetric function E_m = sigma_m / C(n, m)."""
    lam = _as_tuple(values)
    n = lam.size
    if m < 0:
        raise ValueError(f"order m must be non-negative, got {m}")
    if m == 0:
        return 1.0
    if m > n:
        return 0.0
    return sigma_m(lam, m) / math.comb(n, m)


def e_m_values(values, m: int) -> np.ndarray:
    """E_m along the last axis of a stacked eigenvalue array.

    `values` has shape (..., n); the result has shape (...).  This is the
    vectorized path the surface integrals use, so it avoids per-node Python
    work beyond the O(n * m) recursion.
    """
    lam = np.asarray(values, dtype=float)
    if lam.ndim == 0:
        raise ValueError("expected at least one eigenvalue axis")
    n = lam.shape[-1]
    if m < 0:
        raise ValueError(f"order m must be non-negative, got {m}")
    base_shape = lam.shape[:-1]
    if m == 0:
        return np.ones(base_shape)
    if m > n:
        return np.zeros(base_shape)
    e = [np.ones(base_shape)] + [np.zeros(base_shape) for _ in range(m)]
    for i in range(n):
        col = lam[..., i]
        for j in range(min(i + 1, m), 0, -1):
            e[j] = e[j] + col * e[j - 1]
    return e[m] / math.comb(n, m)


def _jacobi(a: np.ndarray, max_sweeps: int = 100):
    """Cyclic Jacobi sweep returning (eigenvalues, eigenvector columns)."""
    a = np.array(a, copy=True)
    n = a.shape[0]
    vec = np.eye(n)
    if n == 1:
        return a[0, :1].copy(), vec
    scale = np.sqrt(np.sum(a * a))
    tol = 1e-15 * max(scale, 1.0)
    for _ in range(max_sweeps):
        off = math.sqrt(max(float(np.sum(a * a) - np.sum(np.diag(a) ** 2)), 0.0))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e154:
                    # theta^2 would overflow; use the asymptotic rotation
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                a[p, q] = a[q, p] = 0.0
                rot_p = c * vec[:, p] - s * vec[:, q]
                rot_q = s * vec[:, p] + c * vec[:, q]
                vec[:, p], vec[:, q] = rot_p, rot_q
    order = np.argsort(np.diag(a))
    return np.diag(a)[order], vec[:, order]


def jacobi_eigenvalues(matrix, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.

    Returns the eigenvalues sorted ascending.  Sized for the tiny matrices
    this package meets (n <= 6); convergence there takes a handful of
    sweeps.
    """
    values, _ = _jacobi(_as_symmetric(matrix), max_sweeps)
    return values


def e_m_matrix(matrix, m: int, method: str = "eigen") -> float:
    """E_m of a symmetric matrix.

    Two independent routes are kept on purpose so they can cross-check each
    other: "eigen" goes through the Jacobi eigenvalues, "minors" sums the
    m-by-m principal minors (the antisymmetrized product definition).
    """
    a = _as_symmetric(matrix)
    n = a.shape[0]
    if m < 0:
        raise ValueError(f"order m must be non-negative, got {m}")
    if m == 0:
        return 1.0
    if m > n:
        return 0.0
    if method == "eigen":
        return e_m(jacobi_eigenvalues(a), m)
    if method == "minors":
        total = 0.0
        for rows in itertools.combinations(range(n), m):
            sub = a[np.ix_(rows, rows)]
            total += float(np.linalg.det(sub))
        return total / math.comb(n, m)
    raise ValueError(f"unknown method {method!r}")


def d_e_m(matrix, m: int) -> np.ndarray:
    """Derivative matrix of E_m with respect to the matrix argument.

    Entry (i, j) is dE_m / dA_ji; for symmetric A the result is symmetric.
    Computed in the eigenbasis, where it is diagonal with entries
    sigma_{m-1} of the deleted eigenvalue tuple.  (The equivalent
    polynomial expansion sum (-1)^r sigma_{m-1-r}(A) A^r cancels digits
    badly at m close to n.)
    """
    a = _as_symmetric(matrix)
    n = a.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"order m must satisfy 1 <= m <= {n}, got {m}")
    if n == 1:
        return np.ones((1, 1))
    lam, vec = _jacobi(a)
    diag = np.array([sigma_m(np.delete(lam, i), m - 1) for i in range(n)])
    return (vec * diag) @ vec.T / math.comb(n, m)


def cone_member(values, m: int) -> bool:
    """Strict Garding cone test: sigma_i > 0 for every 1 <= i <= m."""
    lam = _as_tuple(values)
    n = lam.size
    if not 1 <= m <= n:
        raise ValueError(f"order m must satisfy 1 <= m <= {n}, got {m}")
    return all(sigma_m(lam, i) > 0.0 for i in range(1, m + 1))


def newton_maclaurin_deficit(values, m: int) -> float:
    """Deficit E_1 * E_{m-1} - E_m, non-negative inside the Garding cone.

    Vanishes exactly when all eigenvalues coincide.  Raises
    GardingConeError when the tuple is outside the order-m cone, carrying
    the offending sigma values.
    """
    lam = _as_tuple(values)
    n = lam.size
    if not 1 <= m <= n:
        raise ValueError(f"order m must satisfy 1 <= m <= {n}, got {m}")
    sigmas = [sigma_m(lam, i) for i in range(1, m + 1)]
    if any(s <= 0.0 for s in sigmas):
        raise GardingConeError(m, sigmas)
    return e_m(lam, 1) * e_m(lam, m - 1) - e_m(lam, m)
