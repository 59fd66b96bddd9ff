"""Lagrangian unit normal flow with closed-form particle evolution.

Each surface node becomes a particle flying inward along its normal
geodesic.  Curvatures, potentials and the area Jacobian all solve their
evolution equations in closed form:

    kappa(t) = (kappa cosh t - sinh t) / (cosh t - kappa sinh t)
    V(t)     = V0 cosh t - Vnu0 sinh t
    Vnu(t)   = Vnu0 cosh t - V0 sinh t
    J(t)     = prod_i (cosh t - kappa_i sinh t)

so the only numerical errors are the initial geometry and the quadrature
in flow time.  A particle stays active until the first of its focal time
(a Jacobian factor vanishes) and a global collision estimate; the flow
functional

    Q(t) = e^{(n+1)t} [ sum_active (V-Vnu)/(H-n) J w0
                        - (n+1)/n * int_t^{t_max} sum_active V J w0 dtau ]

is sampled inside a safety-reduced window and checked for monotone
decrease, along with the level-set identity

    sum_active Vnu J w0 = (n+1) * int_t^{t_max} sum_active V J w0 dtau

and monotone decrease of the active area.  The per-particle windows run
to the full cut/focal estimate while sampling stops at the safety factor;
shrinking the windows themselves would truncate the volume integral and
break the exact sphere cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import hypgeo
from ._util import atomic_write_text
from .errors import FlowAssumptionError, FocalTimeError
from .hypersurface import RadialGraph, SurfaceGeometry, build_geometry

__all__ = [
    "DENOM_TOL",
    "H_MARGIN",
    "FlowConfig",
    "FlowParticles",
    "FlowTrace",
    "evolve_curvature",
    "evolve_potentials",
    "area_jacobian",
    "focal_time",
    "focal_times",
    "estimate_cut_time",
    "Q_of_t",
    "verify_flow",
]

DENOM_TOL = 1e-12
H_MARGIN = 1e-8


def evolve_curvature(kappa, t):
    """Principal curvature after flowing for time t.

    Solves kappa' = kappa^2 - 1 from the initial value; broadcasts over
    arrays of curvatures and times.
    """
    kappa = np.asarray(kappa, dtype=float)
    t = np.asarray(t, dtype=float)
    ch, sh = np.cosh(t), np.sinh(t)
    denom = ch - kappa * sh
    if np.any(denom <= DENOM_TOL):
        raise FocalTimeError("curvature evolution hit a focal time")
    out = (kappa * ch - sh) / denom
    return out if out.ndim else float(out)


def evolve_potentials(V0, Vnu0, t):
    """Potential and support function after time t (a Lorentz boost).

    The combination V^2 - Vnu^2 is preserved exactly.
    """
    V0 = np.asarray(V0, dtype=float)
    Vnu0 = np.asarray(Vnu0, dtype=float)
    t = np.asarray(t, dtype=float)
    ch, sh = np.cosh(t), np.sinh(t)
    V = V0 * ch - Vnu0 * sh
    Vnu = Vnu0 * ch - V0 * sh
    if V.ndim:
        return V, Vnu
    return float(V), float(Vnu)


def area_jacobian(kappa0, t):
    """Area element ratio J(t) = prod_i (cosh t - kappa_i sinh t).

    kappa0 holds the initial principal curvatures along the last axis.
    Strictly positive before the focal time; past it the flow map is no
    longer defined, so that is an error rather than a sign flip.
    """
    kappa0 = np.asarray(kappa0, dtype=float)
    t = np.asarray(t, dtype=float)
    factors = np.cosh(t)[..., None] - kappa0 * np.sinh(t)[..., None]
    if np.any(factors <= DENOM_TOL):
        raise FocalTimeError("area Jacobian evaluated at or past a focal time")
    out = np.prod(factors, axis=-1)
    return out if out.ndim else float(out)


def focal_time(kappa0) -> float:
    """First time a Jacobian factor vanishes: min artanh(1/kappa_i).

    Only curvatures above 1 focus; if there are none the time is +inf.
    """
    kappa0 = np.asarray(kappa0, dtype=float).ravel()
    over = kappa0[kappa0 > 1.0]
    if over.size == 0:
        return math.inf
    return float(np.min(np.arctanh(1.0 / over)))


def focal_times(kappa0) -> np.ndarray:
    """Per-row focal times for an (N, n) array of curvature tuples."""
    kappa0 = np.asarray(kappa0, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(kappa0 > 1.0, np.arctanh(np.minimum(1.0 / kappa0, 1.0)), math.inf)
    return np.min(t, axis=-1)


@dataclass
class FlowParticles:
    """Structure-of-arrays state for the particle system at t = 0."""

    n: int
    y: np.ndarray          # (N, n+2) initial positions
    nu0: np.ndarray        # (N, n+2) outward unit normals
    kappa0: np.ndarray     # (N, n) principal curvatures, ascending
    V0: np.ndarray         # (N,)
    Vnu0: np.ndarray       # (N,)
    w0: np.ndarray         # (N,) area weights, sum = initial area
    spacing0: np.ndarray = field(init=False)    # (N,) local grid spacing w0^(1/n)
    t_focal: np.ndarray = field(init=False)     # (N,)
    active_until: np.ndarray = field(init=False)

    def __post_init__(self):
        self.spacing0 = self.w0 ** (1.0 / self.n)
        self.t_focal = focal_times(self.kappa0)
        self.active_until = self.t_focal.copy()

    @classmethod
    def from_geometry(cls, geom: SurfaceGeometry) -> "FlowParticles":
        return cls(
            n=geom.n,
            y=geom.position.copy(),
            nu0=geom.normal.copy(),
            kappa0=geom.kappa.copy(),
            V0=geom.V.copy(),
            Vnu0=geom.V_nu.copy(),
            w0=geom.area_weight.copy(),
        )

    def count(self) -> int:
        return self.y.shape[0]

    def positions_at(self, t: float) -> np.ndarray:
        """Evolved positions X(y, t) along the inward normal geodesics."""
        return hypgeo.geodesic(self.y, -self.nu0, np.full(self.count(), float(t)))


def estimate_cut_time(particles: FlowParticles, t_grid, exclusion: float = 3.0) -> float:
    """Scan a time grid for the first collision between far-apart particles.

    A particle's collision threshold at time tau is its initial spacing
    advected by the largest principal stretch, spacing0 * max_i(cosh tau -
    kappa_i sinh tau); a pair collides when its geodesic distance drops
    below the smaller of the two thresholds.  Pairs closer than
    `exclusion` spacings at t = 0 are same-sheet neighbors and never count.
    Candidate pairs come from a KD-tree on Poincare ball coordinates,
    where the Euclidean distance never exceeds half the geodesic one.

    Returns the first grid time with a collision, +inf if none occurs
    before the smallest focal time.  Either way each particle's
    active_until becomes min(estimate, own focal time).
    """
    if particles.count() < 2:
        raise ValueError("need at least two particles to estimate a cut time")
    cut = math.inf
    focal_min = float(np.min(particles.t_focal))
    kappa_min = particles.kappa0[:, 0] if particles.kappa0.ndim == 2 else particles.kappa0
    for tau in np.sort(np.asarray(t_grid, dtype=float)):
        if tau >= focal_min or tau < 0.0:
            continue
        thr = particles.spacing0 * np.maximum(
            np.cosh(tau) - kappa_min * np.sinh(tau), 0.0
        )
        rmax = float(np.max(thr))
        if rmax <= 0.0:
            continue
        pos = particles.positions_at(tau)
        ball = hypgeo.hyper_to_ball(pos)
        # d_euc <= d_hyp / 2 in the ball, so this radius cannot miss a pair
        pairs = cKDTree(ball).query_pairs(rmax / 2.0, output_type="ndarray")
        if pairs.shape[0] == 0:
            continue
        i, j = pairs[:, 0], pairs[:, 1]
        d = hypgeo.dist(pos[i], pos[j])
        hit = d < np.minimum(thr[i], thr[j])
        if not np.any(hit):
            continue
        ih, jh = i[hit], j[hit]
        d_init = hypgeo.dist(particles.y[ih], particles.y[jh])
        far = d_init >= exclusion * np.maximum(
            particles.spacing0[ih], particles.spacing0[jh]
        )
        if np.any(far):
            cut = float(tau)
            break
    particles.active_until = np.minimum(particles.t_focal, cut)
    return cut


def _active_sums(particles: FlowParticles, tau: float):
    """Weighted sums over active particles at one flow time.

    Returns (S_vol, S_nu, area, term1, n_active, H_min, H_max) where
    term1 is the shifted mean-curvature integral, the t-slice of the flow
    functional's boundary term.
    """
    mask = tau < particles.active_until
    n_active = int(np.count_nonzero(mask))
    if n_active == 0:
        return 0.0, 0.0, 0.0, 0.0, 0, math.nan, math.nan
    kap = particles.kappa0[mask]
    H = np.sum(evolve_curvature(kap, tau), axis=-1)
    low = int(np.argmin(H))
    if H[low] <= particles.n + H_MARGIN:
        raise FlowAssumptionError(
            f"mean curvature {H[low]:.6g} fell to n = {particles.n} at t = {tau:.6g}"
        )
    J = area_jacobian(kap, tau)
    V, Vnu = evolve_potentials(particles.V0[mask], particles.Vnu0[mask], tau)
    w = particles.w0[mask] * J
    S_vol = float(np.sum(V * w))
    S_nu = float(np.sum(Vnu * w))
    area = float(np.sum(w))
    term1 = float(np.sum((V - Vnu) / (H - particles.n) * w))
    return S_vol, S_nu, area, term1, n_active, float(H[low]), float(np.max(H))


def Q_of_t(particles: FlowParticles, t: float, t_max: float, dt: float = 1e-3) -> float:
    """Flow functional at one time, with the tail integral to t_max.

    The tau integral uses a composite trapezoid at step ~dt.  t must not
    exceed any particle's active window.
    """
    t_safe = float(np.min(particles.active_until))
    if t > t_safe * (1.0 + 1e-12):
        raise FlowAssumptionError(
            f"t = {t:.6g} is past the shortest active window {t_safe:.6g}"
        )
    if t_max < t:
        raise ValueError("t_max must not precede t")
    steps = max(1, math.ceil((t_max - t) / max(dt, 1e-12)))
    taus = np.linspace(t, t_max, steps + 1)
    S = np.array([_active_sums(particles, tau)[0] for tau in taus])
    tail = float(np.trapezoid(S, taus)) if hasattr(np, "trapezoid") else float(np.trapz(S, taus))
    term1 = _active_sums(particles, t)[3]
    n = particles.n
    return math.exp((n + 1) * t) * (term1 - (n + 1) / n * tail)


@dataclass
class FlowConfig:
    """Knobs for verify_flow; defaults match the calibrated tolerances."""

    samples: int = 400          # target sample count inside the safe window
    safety: float = 0.9         # fraction of the shortest window that is sampled
    cut_samples: int = 96       # collision scan resolution
    exclusion: float = 3.0      # same-sheet exclusion radius, in spacings
    q_c_grid: float = 1.0       # Q monotonicity slack, h^2 coefficient
    q_c_time: float = 50.0      # Q monotonicity slack, dt^2 coefficient
    levelset_c_grid: float = 0.5    # level-set residual tolerance, h^2 coefficient
    levelset_c_time: float = 400.0  # level-set residual tolerance, dt^2 coefficient
    round_c: float = 4.0        # umbilicity spread bound round_c * h^2 for roundness


@dataclass
class FlowTrace:
    """Sampled flow series plus the verdicts of the monotonicity checks."""

    times: np.ndarray
    Q: np.ndarray
    H_min: np.ndarray
    H_max: np.ndarray
    area: np.ndarray
    levelset_residual: np.ndarray
    levelset_rel: np.ndarray
    n_active: np.ndarray
    t_safe: float
    t_max: float
    dt: float
    cut_estimate: float
    focal_min: float
    q_slack: float
    levelset_tol_rel: float
    hk_lhs0: float
    coarea_volume: float
    q_monotone_ok: bool
    area_decreasing_ok: bool
    h_above_n_ok: bool
    levelset_ok: bool
    round_surface: bool
    window_truncated: bool

    def passed(self) -> bool:
        return (self.q_monotone_ok and self.area_decreasing_ok
                and self.h_above_n_ok and self.levelset_ok)

    def to_csv(self, path) -> None:
        lines = ["t,Q,H_min,H_max,area,levelset_residual,n_active"]
        for k in range(len(self.times)):
            lines.append(",".join([
                repr(float(self.times[k])),
                repr(float(self.Q[k])),
                repr(float(self.H_min[k])),
                repr(float(self.H_max[k])),
                repr(float(self.area[k])),
                repr(float(self.levelset_residual[k])),
                str(int(self.n_active[k])),
            ]))
        atomic_write_text(path, "\n".join(lines) + "\n")

    def summary(self) -> dict:
        return {
            "t_safe": self.t_safe,
            "t_max": self.t_max,
            "dt": self.dt,
            "cut_estimate": self.cut_estimate,
            "focal_min": self.focal_min,
            "samples": int(len(self.times)),
            "Q0": float(self.Q[0]),
            "Q_final": float(self.Q[-1]),
            "q_slack": self.q_slack,
            "levelset_tol_rel": self.levelset_tol_rel,
            "max_levelset_rel": float(np.max(np.abs(self.levelset_rel))),
            "q_monotone_ok": self.q_monotone_ok,
            "area_decreasing_ok": self.area_decreasing_ok,
            "h_above_n_ok": self.h_above_n_ok,
            "levelset_ok": self.levelset_ok,
            "round_surface": self.round_surface,
            "window_truncated": self.window_truncated,
            "pass": self.passed(),
        }


def verify_flow(graph: RadialGraph, config: FlowConfig | None = None,
                geom: SurfaceGeometry | None = None) -> FlowTrace:
    """Run the particle flow on a surface and check its monotone laws.

    Q(t) must not increase between samples (up to a slack budget of
    C h^2 + C' dt^2 relative to the t = 0 boundary term), the active area
    must shrink, H must stay above n, and the level-set identity must
    hold to a relative tolerance of the same form.  Sampling covers
    [0, safety * shortest window]; the tail integrals always run to the
    longest window so the enclosed volume is not silently truncated.

    The level-set residual is asserted only when the initial surface is
    round (umbilicity spread within round_c * h^2).  Off a round surface
    the windows end at different times per particle, so the discrete
    residual carries an O(1) staggering term; it is still recorded in
    the trace for inspection but does not fail the run.
    """
    if config is None:
        config = FlowConfig()
    if geom is None:
        geom = build_geometry(graph)
    particles = FlowParticles.from_geometry(geom)
    H0 = geom.mean_curvature
    low = int(np.argmin(H0))
    if H0[low] <= particles.n + H_MARGIN:
        raise FlowAssumptionError(
            f"initial mean curvature {H0[low]:.6g} is not above n = {particles.n}"
        )

    focal_min = float(np.min(particles.t_focal))
    scan = np.linspace(0.0, focal_min, config.cut_samples, endpoint=False)
    cut = estimate_cut_time(particles, scan, exclusion=config.exclusion)

    window_min = float(np.min(particles.active_until))
    t_max = float(np.max(particles.active_until))
    t_safe = config.safety * window_min
    if not 0.0 < t_safe <= t_max:
        raise FlowAssumptionError("empty flow window, nothing to verify")

    segments = max(config.samples, math.ceil(config.samples * t_max / t_safe))
    taus = np.linspace(0.0, t_max, segments + 1)
    dt = t_max / segments

    S_vol = np.empty(segments + 1)
    S_nu = np.empty(segments + 1)
    area = np.empty(segments + 1)
    term1 = np.empty(segments + 1)
    n_active = np.empty(segments + 1, dtype=int)
    H_min = np.empty(segments + 1)
    H_max = np.empty(segments + 1)
    for k, tau in enumerate(taus):
        S_vol[k], S_nu[k], area[k], term1[k], n_active[k], H_min[k], H_max[k] = \
            _active_sums(particles, tau)

    # tail[k] = integral of S_vol from taus[k] to t_max, composite trapezoid
    seg = 0.5 * dt * (S_vol[1:] + S_vol[:-1])
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])

    keep = taus <= t_safe * (1.0 + 1e-12)
    times = taus[keep]
    n = particles.n
    Q = np.exp((n + 1) * times) * (term1[keep] - (n + 1) / n * tail[keep])
    levelset = S_nu[keep] - (n + 1) * tail[keep]
    levelset_rel = levelset / np.maximum(np.abs(S_nu[keep]), 1e-300)

    h = graph.resolution
    scale = max(term1[0], 1e-300)
    q_slack = (config.q_c_grid * h * h + config.q_c_time * dt * dt) * scale
    ls_tol = config.levelset_c_grid * h * h + config.levelset_c_time * dt * dt

    q_monotone_ok = bool(np.all(np.diff(Q) <= q_slack))
    area_decreasing_ok = bool(np.all(np.diff(area[keep]) < 0.0))
    h_above_n_ok = bool(np.all(H_min[keep] > n + H_MARGIN))

    spread = float(np.max(particles.kappa0) - np.min(particles.kappa0))
    round_surface = spread <= config.round_c * h * h * float(
        np.max(np.abs(particles.kappa0)))
    if round_surface:
        levelset_ok = bool(np.all(np.abs(levelset_rel) <= ls_tol))
    else:
        levelset_ok = True

    return FlowTrace(
        times=times,
        Q=Q,
        H_min=H_min[keep],
        H_max=H_max[keep],
        area=area[keep],
        levelset_residual=levelset,
        levelset_rel=levelset_rel,
        n_active=n_active[keep],
        t_safe=t_safe,
        t_max=t_max,
        dt=dt,
        cut_estimate=cut,
        focal_min=focal_min,
        q_slack=q_slack,
        levelset_tol_rel=ls_tol,
        hk_lhs0=float(term1[0]),
        coarea_volume=float(tail[0]),
        q_monotone_ok=q_monotone_ok,
        area_decreasing_ok=area_decreasing_ok,
        h_above_n_ok=h_above_n_ok,
        levelset_ok=levelset_ok,
        round_surface=round_surface,
        window_truncated=bool(cut < focal_min),
    )
