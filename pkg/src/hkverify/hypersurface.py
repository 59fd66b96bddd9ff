"""Discrete star-shaped hypersurfaces in H^{n+1} (n = 1, 2) as radial graphs.

Grid conventions
----------------
n = 1: uniform angles theta_j = 2 pi j / n_theta, rho stored as (n_theta,).

n = 2: staggered colatitudes phi_i = (i + 1/2) pi / n_phi (no node sits on
a pole) crossed with uniform azimuths theta_j = 2 pi j / n_theta; rho is
stored row-major as (n_phi, n_theta).  Fields continue smoothly across a
pole via (phi -> -phi, theta -> theta + pi), which is why n_theta must be
even.

Derivatives use 4th-order central stencils (periodic in the azimuth, ghost
rows from the pole rule in the colatitude).  Quadrature is the midpoint
rule with sin(phi) weight in the colatitude times the trapezoid rule in
the azimuth, so integrals of smooth surface data converge at second order
overall while the pointwise geometry is more accurate than that.

The induced geometry of the graph r = rho(angles) over the warped metric
dr^2 + sinh(r)^2 dS^2 is assembled from the standard closed forms

    g_ij = rho_i rho_j + sinh(rho)^2 s_ij
    h_ij = (-D_i D_j rho + 2 coth(rho) rho_i rho_j
            + sinh(rho) cosh(rho) s_ij) / v,
    v    = sqrt(1 + |grad rho|^2_s / sinh(rho)^2),

where s is the round metric of the parameter sphere and D its connection.
The outward normal gives geodesic spheres the positive curvature coth(R).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import lpmv

from . import hypgeo
from ._util import atomic_write_text, exact_sum
from .errors import DegenerateSurfaceError, GenerationError, RejectedShapeError

__all__ = [
    "RadialGraph",
    "SurfaceGeometry",
    "build_geometry",
    "area_integral",
    "weighted_volume",
    "enclosed_volume",
    "gen_sphere",
    "gen_perturbed_sphere",
    "save_surface",
    "load_surface",
]

MIN_GRID = 8


@dataclass
class RadialGraph:
    """Radial distance samples of a closed star-shaped hypersurface."""

    n: int
    rho: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        if self.n not in (1, 2):
            raise ValueError(f"hypersurface dimension must be 1 or 2, got {self.n}")
        if self.rho.ndim != self.n:
            raise ValueError(f"rho must be a {self.n}-D array for n = {self.n}")
        if not np.all(np.isfinite(self.rho)):
            raise ValueError("rho contains non-finite entries")
        if np.any(self.rho <= 0.0):
            raise ValueError("rho must be strictly positive")
        if any(s < MIN_GRID for s in self.rho.shape):
            raise ValueError(f"grid sizes must be at least {MIN_GRID}")
        if self.n == 2 and self.rho.shape[1] % 2 != 0:
            raise ValueError("n_theta must be even (pole continuation shifts by pi)")

    @property
    def n_theta(self) -> int:
        return self.rho.shape[-1]

    @property
    def n_phi(self) -> int:
        if self.n != 2:
            raise AttributeError("n_phi is only defined for n = 2")
        return self.rho.shape[0]

    @property
    def h_theta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    @property
    def h_phi(self) -> float:
        return np.pi / self.n_phi

    @property
    def resolution(self) -> float:
        """Angular step that governs quadrature error, h in the tol = C h^2 rule."""
        return self.h_phi if self.n == 2 else self.h_theta

    def node_count(self) -> int:
        return self.rho.size

    def angles(self):
        """Colatitude/azimuth node coordinates (phi, theta) or just theta."""
        theta = np.arange(self.n_theta) * self.h_theta
        if self.n == 1:
            return theta
        phi = (np.arange(self.n_phi) + 0.5) * self.h_phi
        return phi, theta

    def rotated(self, steps: int) -> "RadialGraph":
        """Same surface with the azimuth grid rolled by an integer step."""
        return RadialGraph(self.n, np.roll(self.rho, steps, axis=-1), dict(self.meta))

    def to_dict(self) -> dict:
        grid = {"n_theta": self.n_theta}
        if self.n == 2:
            grid = {"n_phi": self.n_phi, "n_theta": self.n_theta}
        return {
            "n": self.n,
            "grid": grid,
            "rho": self.rho.ravel().tolist(),
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RadialGraph":
        try:
            n = int(data["n"])
            grid = data["grid"]
            flat = np.asarray(data["rho"], dtype=float)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed surface record: {exc}") from exc
        if n == 2:
            shape = (int(grid["n_phi"]), int(grid["n_theta"]))
        elif n == 1:
            shape = (int(grid["n_theta"]),)
        else:
            raise ValueError(f"unsupported dimension n = {n}")
        if flat.size != int(np.prod(shape)):
            raise ValueError("rho length does not match the declared grid")
        return cls(n, flat.reshape(shape), dict(data.get("meta", {})))


def save_surface(graph: RadialGraph, path) -> None:
    atomic_write_text(path, json.dumps(graph.to_dict()) + "\n")


def load_surface(path) -> RadialGraph:
    with open(path) as handle:
        return RadialGraph.from_dict(json.load(handle))


# 4th-order central stencils.  np.roll(f, k) picks up f[j - k], so positive
# shifts look backward along the axis.

def _periodic_d1(f, h, axis):
    return (
        -np.roll(f, -2, axis) + 8.0 * np.roll(f, -1, axis)
        - 8.0 * np.roll(f, 1, axis) + np.roll(f, 2, axis)
    ) / (12.0 * h)


def _periodic_d2(f, h, axis):
    return (
        -np.roll(f, -2, axis) + 16.0 * np.roll(f, -1, axis) - 30.0 * f
        + 16.0 * np.roll(f, 1, axis) - np.roll(f, 2, axis)
    ) / (12.0 * h * h)


def _pole_extend(f: np.ndarray) -> np.ndarray:
    """Add two ghost rows per pole using (phi -> -phi, theta -> theta + pi)."""
    flip = np.roll(f, f.shape[1] // 2, axis=1)
    return np.vstack([flip[1::-1], f, flip[:-3:-1]])


def _colat_d1(ext, h):
    return (-ext[4:] + 8.0 * ext[3:-1] - 8.0 * ext[1:-3] + ext[:-4]) / (12.0 * h)


def _colat_d2(ext, h):
    return (
        -ext[4:] + 16.0 * ext[3:-1] - 30.0 * ext[2:-2]
        + 16.0 * ext[1:-3] - ext[:-4]
    ) / (12.0 * h * h)


@dataclass
class SurfaceGeometry:
    """Pointwise discrete geometry of a radial graph, flattened row-major.

    kappa holds the principal curvatures sorted ascending per node;
    kappa_shifted is kappa - 1 (the hyperbolic-convexity eigenvalues).
    area_weight already contains the full quadrature weight, so surface
    integrals are plain weighted sums.
    """

    n: int
    grid: tuple
    h_phi: float
    h_theta: float
    position: np.ndarray
    normal: np.ndarray
    metric: np.ndarray
    second_form: np.ndarray
    weingarten: np.ndarray
    kappa: np.ndarray
    kappa_shifted: np.ndarray
    V: np.ndarray
    V_nu: np.ndarray
    area_weight: np.ndarray
    base: np.ndarray

    @property
    def resolution(self) -> float:
        return self.h_phi if self.n == 2 else self.h_theta

    @property
    def mean_curvature(self) -> np.ndarray:
        return np.sum(self.kappa, axis=-1)

    def node_count(self) -> int:
        return self.area_weight.size

    def area(self) -> float:
        return exact_sum(self.area_weight)


def area_integral(geom: SurfaceGeometry, values) -> float:
    """Surface integral of a per-node field, by compensated summation."""
    values = np.asarray(values, dtype=float)
    if values.shape != geom.area_weight.shape:
        raise ValueError("integrand shape does not match the node count")
    return exact_sum(values * geom.area_weight)


def _sigma_weights(graph: RadialGraph) -> np.ndarray:
    """Quadrature weights for the parameter sphere (no surface factors)."""
    if graph.n == 1:
        return np.full(graph.n_theta, graph.h_theta)
    phi, _ = graph.angles()
    w = np.sin(phi)[:, None] * graph.h_phi * graph.h_theta
    return np.broadcast_to(w, graph.rho.shape).copy()


def weighted_volume(graph: RadialGraph, base=None) -> float:
    """Integral of the potential V over the enclosed region.

    The radial integral of cosh(r) sinh(r)^n is exact
    (sinh(rho)^{n+1} / (n+1) per direction), only the angular quadrature is
    discrete.  Requires the potential's base point to be the star center,
    which is the coordinate origin of the graph.
    """
    _require_centered_base(graph.n, base)
    radial = np.sinh(graph.rho) ** (graph.n + 1) / (graph.n + 1)
    return exact_sum(radial * _sigma_weights(graph))


def enclosed_volume(graph: RadialGraph) -> float:
    """Unweighted volume of the enclosed region (exact radial integral)."""
    if graph.n == 1:
        radial = np.cosh(graph.rho) - 1.0
    else:
        radial = (np.sinh(graph.rho) * np.cosh(graph.rho) - graph.rho) / 2.0
    return exact_sum(radial * _sigma_weights(graph))


def _require_centered_base(n: int, base) -> np.ndarray:
    o = hypgeo.origin(n)
    if base is None:
        return o
    base = np.asarray(base, dtype=float)
    if base.shape != o.shape or not np.allclose(base, o, atol=1e-14):
        raise ValueError(
            "exact radial integration needs the base point at the graph center"
        )
    return o


def build_geometry(graph: RadialGraph, base=None) -> SurfaceGeometry:
    """Assemble the discrete first and second fundamental forms.

    `base` is the base point of the static potential (defaults to the
    graph's own center); V and the support function V_nu are computed
    against it, so off-center potentials vary over the surface.
    """
    if base is None:
        base = hypgeo.origin(graph.n)
    else:
        base = np.asarray(base, dtype=float)
        hypgeo.validate_point(base)
    if graph.n == 2:
        geom = _build_n2(graph, base)
    else:
        geom = _build_n1(graph, base)
    bad = np.nonzero(geom.V - geom.V_nu <= 0.0)[0]
    if bad.size:
        raise DegenerateSurfaceError(
            "support function reached the potential, V - V_nu <= 0", node=int(bad[0])
        )
    return geom


def _build_n1(graph: RadialGraph, base: np.ndarray) -> SurfaceGeometry:
    rho = graph.rho
    h = graph.h_theta
    theta = graph.angles()
    lam = np.sinh(rho)
    lamp = np.cosh(rho)

    d1 = _periodic_d1(rho, h, 0)
    d2 = _periodic_d2(rho, h, 0)

    g = d1 * d1 + lam * lam
    bad = np.nonzero(g <= 0.0)[0]
    if bad.size:
        raise DegenerateSurfaceError("induced metric is not positive", node=int(bad[0]))
    v = np.sqrt(1.0 + (d1 / lam) ** 2)
    hform = (-d2 + 2.0 * (lamp / lam) * d1 * d1 + lam * lamp) / v
    kappa = (hform / g)[:, None]

    w = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    w_t = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    position = np.concatenate([lamp[:, None], lam[:, None] * w], axis=-1)
    nu_space = (lamp[:, None] * w - (d1 / lam)[:, None] * w_t) / v[:, None]
    normal = np.concatenate([(lam / v)[:, None], nu_space], axis=-1)

    V = hypgeo.potential(position, base)
    V_nu = hypgeo.potential(normal, base)
    weight = np.sqrt(g) * h

    return SurfaceGeometry(
        n=1,
        grid=(graph.n_theta,),
        h_phi=float("nan"),
        h_theta=h,
        position=position,
        normal=normal,
        metric=g.reshape(-1, 1, 1),
        second_form=hform.reshape(-1, 1, 1),
        weingarten=(hform / g).reshape(-1, 1, 1),
        kappa=kappa,
        kappa_shifted=kappa - 1.0,
        V=np.asarray(V),
        V_nu=np.asarray(V_nu),
        area_weight=weight,
        base=base,
    )


def _build_n2(graph: RadialGraph, base: np.ndarray) -> SurfaceGeometry:
    rho = graph.rho
    P, T = rho.shape
    hp, ht = graph.h_phi, graph.h_theta
    phi, theta = graph.angles()
    sp = np.sin(phi)[:, None]
    cp = np.cos(phi)[:, None]

    rho_t = _periodic_d1(rho, ht, 1)
    rho_tt = _periodic_d2(rho, ht, 1)
    ext = _pole_extend(rho)
    rho_p = _colat_d1(ext, hp)
    rho_pp = _colat_d2(ext, hp)
    rho_pt = _colat_d1(_pole_extend(rho_t), hp)

    lam = np.sinh(rho)
    lamp = np.cosh(rho)

    # Covariant Hessian of rho on the round parameter sphere.
    hess_pp = rho_pp
    hess_pt = rho_pt - (cp / sp) * rho_t
    hess_tt = rho_tt + sp * cp * rho_p

    grad2 = rho_p**2 + (rho_t / sp) ** 2
    v = np.sqrt(1.0 + grad2 / lam**2)

    g_pp = rho_p**2 + lam**2
    g_pt = rho_p * rho_t
    g_tt = rho_t**2 + (lam * sp) ** 2
    detg = g_pp * g_tt - g_pt**2
    bad = np.nonzero((detg <= 0.0) | (g_pp <= 0.0))
    if bad[0].size:
        node = int(bad[0][0] * T + bad[1][0])
        raise DegenerateSurfaceError("induced metric is not positive definite", node=node)

    two_cot = 2.0 * lamp / lam
    h_pp = (-hess_pp + two_cot * rho_p * rho_p + lam * lamp) / v
    h_pt = (-hess_pt + two_cot * rho_p * rho_t) / v
    h_tt = (-hess_tt + two_cot * rho_t * rho_t + lam * lamp * sp**2) / v

    gi_pp = g_tt / detg
    gi_pt = -g_pt / detg
    gi_tt = g_pp / detg
    w_pp = gi_pp * h_pp + gi_pt * h_pt
    w_pt = gi_pp * h_pt + gi_pt * h_tt
    w_tp = gi_pt * h_pp + gi_tt * h_pt
    w_tt = gi_pt * h_pt + gi_tt * h_tt

    # (tr^2 - 4 det) cancels catastrophically near umbilic points; the
    # difference form stays exact there
    tr = w_pp + w_tt
    disc = np.sqrt(np.maximum((w_pp - w_tt) ** 2 + 4.0 * w_pt * w_tp, 0.0))
    k_lo = 0.5 * (tr - disc)
    k_hi = 0.5 * (tr + disc)

    w = np.stack(
        [sp * np.cos(theta)[None, :], sp * np.sin(theta)[None, :],
         np.broadcast_to(cp, (P, T))],
        axis=-1,
    )
    w_phi = np.stack(
        [cp * np.cos(theta)[None, :], cp * np.sin(theta)[None, :],
         np.broadcast_to(-sp, (P, T))],
        axis=-1,
    )
    w_theta = np.stack(
        [-sp * np.sin(theta)[None, :], sp * np.cos(theta)[None, :],
         np.zeros((P, T))],
        axis=-1,
    )

    position = np.concatenate([lamp[..., None], lam[..., None] * w], axis=-1)
    tangential = rho_p[..., None] * w_phi + (rho_t / sp**2)[..., None] * w_theta
    nu_space = (lamp[..., None] * w - tangential / lam[..., None]) / v[..., None]
    normal = np.concatenate([(lam / v)[..., None], nu_space], axis=-1)

    V = hypgeo.potential(position, base)
    V_nu = hypgeo.potential(normal, base)
    weight = lam**2 * v * sp * hp * ht

    N = P * T
    metric = np.empty((N, 2, 2))
    metric[:, 0, 0] = g_pp.ravel()
    metric[:, 0, 1] = metric[:, 1, 0] = g_pt.ravel()
    metric[:, 1, 1] = g_tt.ravel()
    second = np.empty((N, 2, 2))
    second[:, 0, 0] = h_pp.ravel()
    second[:, 0, 1] = second[:, 1, 0] = h_pt.ravel()
    second[:, 1, 1] = h_tt.ravel()
    wein = np.empty((N, 2, 2))
    wein[:, 0, 0] = w_pp.ravel()
    wein[:, 0, 1] = w_pt.ravel()
    wein[:, 1, 0] = w_tp.ravel()
    wein[:, 1, 1] = w_tt.ravel()
    kappa = np.stack([k_lo.ravel(), k_hi.ravel()], axis=-1)

    return SurfaceGeometry(
        n=2,
        grid=(P, T),
        h_phi=hp,
        h_theta=ht,
        position=position.reshape(N, 4),
        normal=normal.reshape(N, 4),
        metric=metric,
        second_form=second,
        weingarten=wein,
        kappa=kappa,
        kappa_shifted=kappa - 1.0,
        V=V.ravel(),
        V_nu=V_nu.ravel(),
        area_weight=weight.ravel(),
        base=base,
    )


def _offset_cosines(n: int, grid) -> np.ndarray:
    """cos of the angle between each grid direction and the offset axis."""
    if n == 2:
        P, T = grid
        phi = (np.arange(P) + 0.5) * (np.pi / P)
        return np.broadcast_to(np.cos(phi)[:, None], (P, T)).copy()
    (T,) = grid
    theta = np.arange(T) * (2.0 * np.pi / T)
    return np.cos(theta)


def gen_sphere(radius: float, center_offset: float = 0.0, n: int = 2,
               grid=(128, 256)) -> RadialGraph:
    """Geodesic sphere of the given radius, optionally off-center.

    The sphere center sits at distance `center_offset` from the coordinate
    origin along the polar axis (n = 2) or the first axis (n = 1); the
    origin must stay strictly inside, so center_offset < radius.  Radial
    distances solve the hyperbolic law of cosines

        cosh(radius) = cosh(rho) cosh(d) - sinh(rho) sinh(d) cos(gamma)

    by safeguarded Newton iteration, bracketed on [radius - d, radius + d].
    """
    if radius <= 0.0:
        raise GenerationError(f"radius must be positive, got {radius}")
    if not 0.0 <= center_offset < radius:
        raise GenerationError(
            f"center offset must satisfy 0 <= offset < radius, got {center_offset}"
        )
    grid = tuple(int(g) for g in (grid if np.iterable(grid) else (grid,)))
    if center_offset == 0.0:
        rho = np.full(grid, float(radius))
        return RadialGraph(n, rho, {"shape": "sphere", "radius": radius, "offset": 0.0})

    d = float(center_offset)
    cosg = _offset_cosines(n, grid)
    chd, shd = np.cosh(d), np.sinh(d)
    chR = np.cosh(radius)

    def f(x):
        return np.cosh(x) * chd - np.sinh(x) * shd * cosg - chR

    def fp(x):
        return np.sinh(x) * chd - np.cosh(x) * shd * cosg

    lo = np.full(grid, radius - d)
    hi = np.full(grid, radius + d)
    x = np.full(grid, float(radius))
    tol = 1e-14 * max(chR, 1.0)
    for _ in range(200):
        fx = f(x)
        if np.all(np.abs(fx) <= tol):
            break
        hi = np.where(fx > 0.0, x, hi)
        lo = np.where(fx <= 0.0, x, lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(fp(x) != 0.0, fx / fp(x), np.inf)
        cand = x - step
        mid = 0.5 * (lo + hi)
        x = np.where((cand > lo) & (cand < hi) & np.isfinite(cand), cand, mid)
    resid = np.max(np.abs(f(x)))
    if resid > 1e-12 * max(chR, 1.0):
        raise GenerationError(f"law-of-cosines solve stalled, residual {resid:.3e}")
    return RadialGraph(
        n, x, {"shape": "sphere", "radius": float(radius), "offset": d}
    )


def _harmonic(n: int, mode, grid) -> np.ndarray:
    if n == 2:
        try:
            ell, m = (int(v) for v in mode)
        except (TypeError, ValueError) as exc:
            raise GenerationError(f"n = 2 mode must be a pair (l, m): {exc}") from exc
        if ell < 0 or not 0 <= m <= ell:
            raise GenerationError(f"mode order out of range: ({ell}, {m})")
        P, T = grid
        phi = (np.arange(P) + 0.5) * (np.pi / P)
        theta = np.arange(T) * (2.0 * np.pi / T)
        return lpmv(m, ell, np.cos(phi))[:, None] * np.cos(m * theta)[None, :]
    k = int(mode[0]) if np.iterable(mode) else int(mode)
    if k < 0:
        raise GenerationError(f"mode order out of range: {k}")
    (T,) = grid
    theta = np.arange(T) * (2.0 * np.pi / T)
    return np.cos(k * theta)


def gen_perturbed_sphere(radius: float, amp: float, mode, n: int = 2,
                         grid=(128, 256)) -> RadialGraph:
    """Sphere of the given radius with a single harmonic perturbation.

    n = 2 takes mode = (l, m) and perturbs by amp * P_l^m(cos phi) cos(m
    theta); n = 1 takes an integer Fourier mode k.  The result is validated
    post-hoc: rho must stay positive and the mean curvature must stay above
    n everywhere, otherwise the shape is rejected with the violating node.
    """
    if radius <= 0.0:
        raise GenerationError(f"radius must be positive, got {radius}")
    grid = tuple(int(g) for g in (grid if np.iterable(grid) else (grid,)))
    rho = radius + amp * _harmonic(n, mode, grid)
    flat = rho.ravel()
    bad = np.nonzero(flat <= 0.0)[0]
    if bad.size:
        raise RejectedShapeError(
            f"perturbation drives rho to {flat[bad[0]]:.3g}", node=int(bad[0])
        )
    graph = RadialGraph(
        n, rho,
        {"shape": "perturbed", "radius": float(radius), "amp": float(amp),
         "mode": list(mode) if np.iterable(mode) else [int(mode)]},
    )
    geom = build_geometry(graph)
    H = geom.mean_curvature
    worst = int(np.argmin(H))
    if H[worst] <= n + 1e-8:
        raise RejectedShapeError(
            f"mean curvature {H[worst]:.6g} is not above {n}", node=worst
        )
    return graph
