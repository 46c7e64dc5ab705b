"""Leading-order Cauchy-data matching and approximate glued meshes.

Near its boundary circle of radius rho_tau ~ |tau|^{3/2}, a vertically shifted
half-Delaunay surface is the graph of

    -+ (tau^2/4) log rho  +  V(rho)        (- for unduloids, + for nodoids)

over an annulus in the plane, with |V| = O(tau^3).  The perturbed base surface
carries the matching graph model

    -+ (tau~^2/4) log rho + a0 + a1 rho cos theta + a_-1 rho sin theta
        - W^_g + V^,       tau~^2 = tau^2 + 4 t.

Equating Dirichlet and Neumann traces on the matching circle decouples mode by
mode: the Neumann constant determines t, the Dirichlet constant a0, modes +-1
determine a_+-1 together with the +-1 modes of g, and every |n| >= 2 solves a
2x2 system in (g_n, h_n).  The solver is exact on the truncated Fourier space;
re-evaluating both sides gives residuals at roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .delaunay_profile import (
    DelaunayProfile,
    cached_profile,
    neck_geometry,
)
from .embedding import SurfaceMesh, mesh_delaunay, _grid_faces, \
    _orient_outward, discrete_mean_curvature
from .errors import (
    GridTooCoarseError,
    InvalidParameterError,
    ParameterOutOfRangeError,
    RootFindFailureError,
    TruncationMismatchError,
)
from .harmonic import CircleFourier

DEFAULT_TRUNCATION = 64


def _sgn(tau: float) -> float:
    return 1.0 if tau > 0 else -1.0


def log_coefficient(tau: float) -> float:
    """Log-r coefficient of the boundary graph: -tau^2/4 for unduloids."""
    return -_sgn(tau) * tau * tau / 4.0


def collar_shift(tau: float) -> float:
    """Vertical shift that centers the boundary graph on its pure-log model.

    Expanding the height in the boundary annulus gives the model
    (tau^2/4) log(8 rho / tau^2) up to O(tau^3); removing the full constant,
    i.e. shifting by sign(tau) (tau^2/4) log(8/tau^2), is what leaves an
    O(tau^3) remainder.  The conventional positioning shift stored in
    :class:`NeckGeometry` uses log(4/tau^2); the two differ by the constant
    (tau^2/4) log 2, which would otherwise pollute the measured mode-0 data.
    """
    t2 = tau * tau
    return _sgn(tau) * (t2 / 4.0) * math.log(8.0 / t2)


# -- the half-Delaunay boundary annulus as a vertical graph -------------------

class DelaunayGraph:
    """Boundary collar of the shifted half surface as a graph over the plane.

    Covers the parameter window s in [-s_tau, 0); the planar radius
    rho(s) = |tau/2| e^{sigma(s)} decreases monotonically toward the waist, so
    heights and slopes at prescribed radii are obtained by root finding in s.
    """

    def __init__(self, profile: DelaunayProfile):
        if profile.s_tau <= 0.0:
            raise InvalidParameterError(
                "the cylinder (tau = 1) has no boundary annulus graph"
            )
        self.profile = profile
        self.tau = profile.tau
        self.shift = collar_shift(self.tau)
        self.log_coeff = log_coefficient(self.tau)
        geom = neck_geometry(profile)
        self.rho_waist = abs(geom.r0)
        self.rho_tau = abs(geom.r_tau)
        if self.rho_tau / 2.0 <= self.rho_waist:
            raise RootFindFailureError(
                f"annulus [rho_tau/2, rho_tau] collides with the waist "
                f"radius at tau={self.tau}"
            )

    def rho(self, s):
        return np.abs(self.profile.radius(s))

    def s_of_rho(self, rho: float) -> float:
        """Parameter s in [-s_tau, 0] with |r(s)| = rho (monotone branch)."""
        s_tau = self.profile.s_tau
        if not (self.rho_waist <= rho <= self.rho_tau * (1 + 1e-12)):
            raise RootFindFailureError(
                f"radius {rho} outside the graph annulus "
                f"[{self.rho_waist}, {self.rho_tau}]"
            )
        target = math.log(2.0 * rho / abs(self.tau))

        def gap(s):
            return float(self.profile.sigma(s)) - target

        try:
            return brentq(gap, -s_tau, 0.0, xtol=1e-14, rtol=1e-15)
        except ValueError as exc:
            raise RootFindFailureError(str(exc)) from exc

    def height_at_s(self, s):
        kappa = self.profile.evaluate(s)[3]
        return kappa / 2.0 + self.shift

    def slope_at_s(self, s):
        """rho d_rho of the height, evaluated parametrically: kappa'/(2 sigma')."""
        _, dsigma, _, _, dkappa = self.profile.evaluate(s)
        return dkappa / (2.0 * dsigma)

    def height(self, rho: float) -> float:
        return float(self.height_at_s(self.s_of_rho(rho)))

    def remainder_samples(self, n: int = 600):
        """(rho, V) with V = height - log_coeff * log rho on [rho_tau/2, rho_tau]."""
        s_tau = self.profile.s_tau
        s_half = self.s_of_rho(self.rho_tau / 2.0)
        ss = np.linspace(-s_tau, s_half, n)
        rho = self.rho(ss)
        V = self.height_at_s(ss) - self.log_coeff * np.log(rho)
        return rho, V

    def remainder_sup(self, n: int = 600) -> float:
        return float(np.max(np.abs(self.remainder_samples(n)[1])))


# -- boundary data records -----------------------------------------------------

@dataclass(frozen=True)
class AnnulusGraphData:
    """Dirichlet/Neumann data of an annulus graph on the matching circle.

    The Dirichlet trace is log_coeff * log(radius) + constant + fourier, the
    Neumann trace (rho d_rho) is neumann_log + neumann_fourier; for pure-log
    data neumann_log equals the Dirichlet log coefficient since
    rho d_rho log rho = 1.  Fourier parts of measured Delaunay data carry the
    O(tau^3) remainder (mode 0 in ``constant`` resp. the 0-mode of
    ``neumann_fourier``).
    """

    radius: float
    side: str
    dirichlet_log: float
    dirichlet_constant: float
    dirichlet_fourier: CircleFourier
    neumann_log: float
    neumann_fourier: CircleFourier

    def dirichlet_remainder(self) -> CircleFourier:
        """Correction data for the matching solver (constant folded in)."""
        return self.dirichlet_fourier.with_coeff(
            0, self.dirichlet_fourier.coeff(0) + self.dirichlet_constant)

    def neumann_remainder(self) -> CircleFourier:
        return self.neumann_fourier


def delaunay_boundary_data(profile: DelaunayProfile,
                           truncation: int = DEFAULT_TRUNCATION
                           ) -> AnnulusGraphData:
    """Measured boundary data of the shifted half-Delaunay graph at rho_tau.

    The log part is the analytic -+tau^2/4; the constant and the Neumann
    0-mode are the numerically measured remainder (the leading-order
    correction data V of the end graph).  The data is axisymmetric, so all
    nonzero Fourier modes vanish.
    """
    graph = DelaunayGraph(profile)
    s_b = -profile.s_tau
    rho_t = graph.rho_tau
    dir_const = float(graph.height_at_s(s_b)
                      - graph.log_coeff * math.log(rho_t))
    neu_rem = float(graph.slope_at_s(s_b) - graph.log_coeff)
    return AnnulusGraphData(
        radius=rho_t,
        side="delaunay",
        dirichlet_log=graph.log_coeff,
        dirichlet_constant=dir_const,
        dirichlet_fourier=CircleFourier.zeros(truncation),
        neumann_log=graph.log_coeff,
        neumann_fourier=CircleFourier.from_dict({0: neu_rem}, truncation),
    )


# -- matching ------------------------------------------------------------------

@dataclass(frozen=True)
class MatchState:
    """Solution unknowns of the leading-order Cauchy matching.

    t perturbs the necksize (tau~ = sqrt(tau^2 + 4t)); a0 and a_+-1 are the
    vertical shift and the two tilts of the base; g is the mean-zero exterior
    boundary datum and h the interior datum with modes 0, +-1 removed.
    """

    t: float
    a0: float
    a1: float
    a_neg1: float
    g: CircleFourier
    h: CircleFourier

    def tau_tilde(self, tau: float) -> float:
        val = tau * tau + 4.0 * self.t
        if val <= 0.0:
            raise ParameterOutOfRangeError(
                f"tau^2 + 4t = {val} is not positive"
            )
        return _sgn(tau) * math.sqrt(val)


@dataclass(frozen=True)
class MatchResult:
    state: MatchState
    r_tau: float
    residual_dirichlet: float
    residual_neumann: float


def _as_pair(corr, truncation):
    if corr is None:
        z = CircleFourier.zeros(truncation)
        return z, z
    d, n = corr
    if d.N != n.N:
        raise TruncationMismatchError(
            f"Dirichlet/Neumann truncations differ: {d.N} vs {n.N}"
        )
    return d, n


def match_cauchy_data(delaunay_corr, surface_corr, tau: float,
                      profile: DelaunayProfile | None = None,
                      tol: float = 1e-10) -> MatchResult:
    """Solve the leading-order Cauchy-data matching mode by mode.

    ``delaunay_corr`` and ``surface_corr`` are (Dirichlet, Neumann) remainder
    pairs on the matching circle (the measured end correction and the supplied
    base-side correction).  Writing D, M for the net Dirichlet and Neumann
    mismatches (Delaunay minus surface), the exact solution is

        t   = -sign(tau) M_0,            a0 = D_0 - M_0 log rho_tau,
        P   = (D_1 + M_1)/2,             g_1 = (M_1 - D_1)/2,
        h_n = (D_n + M_n/|n|)/2,         g_n = (M_n/|n| - D_n)/2   (|n| >= 2),

    with P = (a1 - i a_-1) rho_tau / 2.  Both sides are re-evaluated and the
    sup-mode residuals reported.
    """
    if profile is None:
        profile = cached_profile(tau, tol)
    if profile.s_tau <= 0.0:
        raise InvalidParameterError("matching needs tau != 1")
    t_default = (delaunay_corr or surface_corr)
    truncation = t_default[0].N if t_default else DEFAULT_TRUNCATION
    Vd, Vn = _as_pair(delaunay_corr, truncation)
    Wd, Wn = _as_pair(surface_corr, truncation)
    if Vd.N != Wd.N:
        raise TruncationMismatchError(
            f"correction truncations differ: {Vd.N} vs {Wd.N}"
        )
    N = Vd.N
    rho_t = abs(neck_geometry(profile).r_tau)
    log_rho = math.log(rho_t)
    sgn = _sgn(tau)

    D = Vd - Wd
    M = Vn - Wn

    t = -sgn * M.coeff(0).real
    a0 = (D.coeff(0) - M.coeff(0) * log_rho).real

    P1 = (D.coeff(1) + M.coeff(1)) / 2.0
    Pm1 = (D.coeff(-1) + M.coeff(-1)) / 2.0
    a1 = ((P1 + Pm1) / rho_t).real
    a_neg1 = (1j * (P1 - Pm1) / rho_t).real

    g = CircleFourier.zeros(N)
    g = g.with_coeff(1, (M.coeff(1) - D.coeff(1)) / 2.0)
    g = g.with_coeff(-1, (M.coeff(-1) - D.coeff(-1)) / 2.0)
    h = CircleFourier.zeros(N)
    for n in range(2, N + 1):
        for m in (n, -n):
            Dm, Mm = D.coeff(m), M.coeff(m)
            h = h.with_coeff(m, (Dm + Mm / n) / 2.0)
            g = g.with_coeff(m, (Mm / n - Dm) / 2.0)

    state = MatchState(t=t, a0=a0, a1=a1, a_neg1=a_neg1, g=g, h=h)
    state.tau_tilde(tau)  # validate tau~^2 > 0
    res_d, res_n = matching_residual(state, (Vd, Vn), (Wd, Wn), tau, rho_t)
    return MatchResult(state=state, r_tau=rho_t, residual_dirichlet=res_d,
                       residual_neumann=res_n)


def _tilt_mode_coeffs(state: MatchState, rho: float):
    """Fourier +-1 coefficients of a1 rho cos + a_-1 rho sin at radius rho."""
    P = (state.a1 - 1j * state.a_neg1) * rho / 2.0
    return P, np.conj(P)


def matching_sides(state: MatchState, delaunay_corr, surface_corr,
                   tau: float, rho_tau: float):
    """Dirichlet and Neumann traces of both sides of the matching equations.

    Returns ((surface_dirichlet, surface_neumann), (delaunay_dirichlet,
    delaunay_neumann)) as Fourier data with the log terms evaluated on the
    circle and folded into the constant mode.
    """
    Vd, Vn = delaunay_corr
    Wd, Wn = surface_corr
    N = Vd.N
    sgn = _sgn(tau)
    log_rho = math.log(rho_tau)
    P1, Pm1 = _tilt_mode_coeffs(state, rho_tau)

    surf_d = Wd.with_coeff(0, Wd.coeff(0) - sgn * state.t * log_rho + state.a0)
    surf_d = surf_d.with_coeff(1, surf_d.coeff(1) + P1 - state.g.coeff(1))
    surf_d = surf_d.with_coeff(-1, surf_d.coeff(-1) + Pm1 - state.g.coeff(-1))
    for n in range(2, N + 1):
        for m in (n, -n):
            surf_d = surf_d.with_coeff(m, surf_d.coeff(m) - state.g.coeff(m))

    absn = np.abs(state.g.modes)
    surf_n_coeffs = Wn.coeffs + absn * state.g.coeffs
    surf_n = CircleFourier(surf_n_coeffs, N)
    surf_n = surf_n.with_coeff(0, surf_n.coeff(0) - sgn * state.t)
    surf_n = surf_n.with_coeff(1, surf_n.coeff(1) + P1)
    surf_n = surf_n.with_coeff(-1, surf_n.coeff(-1) + Pm1)

    del_d = CircleFourier(Vd.coeffs - state.h.coeffs, N)
    del_n = CircleFourier(Vn.coeffs - absn * state.h.coeffs, N)
    return (surf_d, surf_n), (del_d, del_n)


def matching_residual(state: MatchState, delaunay_corr, surface_corr,
                      tau: float, rho_tau: float):
    (sd, sn), (dd, dn) = matching_sides(state, delaunay_corr, surface_corr,
                                        tau, rho_tau)
    res_d = float(np.max(np.abs(sd.coeffs - dd.coeffs)))
    res_n = float(np.max(np.abs(sn.coeffs - dn.coeffs)))
    return res_d, res_n


def surface_boundary_data(state: MatchState, corrections, tau: float,
                          profile: DelaunayProfile | None = None,
                          tol: float = 1e-10) -> AnnulusGraphData:
    """Assemble the base-side boundary graph data of a match state.

    The graph is -+(tau~^2/4) log rho + a0 + a1 rho cos + a_-1 rho sin - W^_g
    plus the supplied corrections; the Neumann trace uses the exterior
    extension multiplier -|n| for the g part.
    """
    if profile is None:
        profile = cached_profile(tau, tol)
    rho_t = abs(neck_geometry(profile).r_tau)
    N = state.g.N
    Wd, Wn = _as_pair(corrections, N)
    tau_t = state.tau_tilde(tau)
    dlog = -_sgn(tau) * tau_t * tau_t / 4.0
    P1, Pm1 = _tilt_mode_coeffs(state, rho_t)

    dir_f = Wd.with_coeff(1, Wd.coeff(1) + P1 - state.g.coeff(1))
    dir_f = dir_f.with_coeff(-1, dir_f.coeff(-1) + Pm1 - state.g.coeff(-1))
    for n in range(2, N + 1):
        for m in (n, -n):
            dir_f = dir_f.with_coeff(m, dir_f.coeff(m) - state.g.coeff(m))
    dir_const = state.a0 + dir_f.coeff(0).real
    dir_f = dir_f.with_coeff(0, 0.0)

    absn = np.abs(state.g.modes)
    neu = CircleFourier(Wn.coeffs + absn * state.g.coeffs, N)
    neu = neu.with_coeff(1, neu.coeff(1) + P1)
    neu = neu.with_coeff(-1, neu.coeff(-1) + Pm1)
    return AnnulusGraphData(
        radius=rho_t,
        side="surface",
        dirichlet_log=dlog,
        dirichlet_constant=float(dir_const),
        dirichlet_fourier=dir_f,
        neumann_log=dlog,
        neumann_fourier=neu,
    )


# -- mean curvature of polar-annulus graphs -------------------------------------

@dataclass(frozen=True)
class GraphCurvature:
    """H(u) on the grid together with the quasilinear rearrangement data.

    ``mlml_lhs`` is the expanded form Delta u + (Delta u |grad u|^2
    - (1/2) Hess u(grad u, grad u)) + 2((1+|grad u|^2)^{3/2} - 1
    - (3/2)|grad u|^2); its deviation from 1 on an exact CMC graph is reported
    as data, not asserted (see ``rearrangement_gap``).
    """

    H: np.ndarray
    mlml_lhs: np.ndarray
    weight: np.ndarray

    def rearrangement_gap(self) -> float:
        """max |(mlml_lhs - 1) + 2 W^3 (H - 1)|, the defect of the candidate
        identity linking the two forms."""
        return float(np.max(np.abs(
            (self.mlml_lhs - 1.0) + 2.0 * self.weight ** 3 * (self.H - 1.0)
        )))


def graph_mean_curvature(u: np.ndarray, r: np.ndarray,
                         theta: np.ndarray) -> GraphCurvature:
    """H(u) = -1/2 div(grad u / sqrt(1 + |grad u|^2)) on a polar grid.

    Second-order finite differences: centered and periodic in theta, centered
    with one-sided second-order closures at the radial edges.
    """
    u = np.asarray(u, dtype=float)
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if u.shape != (len(r), len(theta)) or len(r) < 32 or len(theta) < 32:
        raise GridTooCoarseError(
            f"need a >= 32x32 polar grid matching u; got u{u.shape}, "
            f"{len(r)} radii, {len(theta)} angles"
        )
    dtheta = 2.0 * np.pi / len(theta)
    rc = r[:, None]

    def dth(a):
        return (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) / (2 * dtheta)

    def dth2(a):
        return (np.roll(a, -1, axis=1) - 2 * a
                + np.roll(a, 1, axis=1)) / (dtheta * dtheta)

    u_r = np.gradient(u, r, axis=0, edge_order=2)
    u_rr = np.gradient(u_r, r, axis=0, edge_order=2)
    u_t = dth(u)
    u_tt = dth2(u)
    u_rt = np.gradient(u_t, r, axis=0, edge_order=2)

    a = u_r                      # radial gradient component
    b = u_t / rc                 # angular gradient component
    grad2 = a * a + b * b
    W = np.sqrt(1.0 + grad2)

    Fr = a / W
    Ft = b / W
    div = np.gradient(rc * Fr, r, axis=0, edge_order=2) / rc + dth(Ft) / rc
    H = -0.5 * div

    lap = u_rr + u_r / rc + u_tt / (rc * rc)
    hess_rt = u_rt / rc - u_t / (rc * rc)
    hess_tt = u_tt / (rc * rc) + u_r / rc
    Q = u_rr * a * a + 2.0 * hess_rt * a * b + hess_tt * b * b
    mlml = lap + (lap * grad2 - 0.5 * Q) \
        + 2.0 * (W ** 3 - 1.0 - 1.5 * grad2)
    return GraphCurvature(H=H, mlml_lhs=mlml, weight=W)


# -- glued composite meshes ------------------------------------------------------

@dataclass
class GluedMesh:
    mesh: SurfaceMesh
    state: MatchState
    report: dict = field(default_factory=dict)


def _quintic_step(x):
    x = np.clip(x, 0.0, 1.0)
    return x ** 3 * (10.0 - 15.0 * x + 6.0 * x * x)


def _surface_model_height(state: MatchState, tau: float, rho, theta,
                          rho_tau: float):
    """Height of the matched base-side model at (rho, theta), rho >= rho_tau."""
    rho, theta = np.broadcast_arrays(np.asarray(rho, dtype=float),
                                     np.asarray(theta, dtype=float))
    tau_t = state.tau_tilde(tau)
    clog = -_sgn(tau) * tau_t * tau_t / 4.0
    out = clog * np.log(rho) + state.a0 \
        + state.a1 * rho * np.cos(theta) + state.a_neg1 * rho * np.sin(theta)
    if state.g.max_abs_coeff() > 0.0:
        modes = state.g.modes
        decay = (rho_tau / rho[..., None]) ** np.abs(modes)
        phase = np.exp(1j * theta[..., None] * modes)
        wg = (state.g.coeffs * decay * phase).sum(axis=-1)
        out = out - wg.real
    return out


def _sphere_base_mesh(rho_cut: float, resolution: int, pert_height,
                      alpha_blend):
    """Unit sphere tangent to the origin from below, cap of planar radius
    rho_cut removed; vertical perturbation pert_height(rho, theta) faded out
    by alpha_blend(alpha)."""
    center = np.array([0.0, 0.0, -1.0])
    n_theta = max(16, resolution)
    alpha_cut = math.asin(min(1.0, rho_cut))
    n_rows = max(17, resolution // 2 + 1)
    alphas = np.linspace(alpha_cut, math.pi, n_rows)
    theta = np.arange(n_theta) * (2.0 * np.pi / n_theta)
    A, T = np.meshgrid(alphas[:-1], theta, indexing="ij")
    pos = np.stack([np.sin(A) * np.cos(T), np.sin(A) * np.sin(T),
                    np.cos(A)], axis=-1) + center
    rho = np.sin(A)
    lift = pert_height(rho, T) * alpha_blend(A)
    pos[..., 2] += lift
    verts = pos.reshape(-1, 3)
    normals = (center - verts)
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    faces = _grid_faces(n_rows - 1, n_theta, wrap=True)
    # close with the south-pole fan
    pole_index = len(verts)
    verts = np.vstack([verts, center + np.array([0.0, 0.0, -1.0])])
    normals = np.vstack([normals, np.array([[0.0, 0.0, 1.0]])])
    last_row = (n_rows - 2) * n_theta
    fan = [[last_row + j, last_row + (j + 1) % n_theta, pole_index]
           for j in range(n_theta)]
    faces = np.vstack([faces, np.asarray(fan, dtype=np.int64)])
    faces = _orient_outward(verts, faces, normals)
    return SurfaceMesh(verts, faces, normals, ["base"] * len(verts))


def _collar_mesh(state: MatchState, tau: float, rho_tau: float,
                 resolution: int):
    n_theta = max(16, resolution)
    n_r = max(6, resolution // 16)
    radii = np.geomspace(rho_tau, 2.0 * rho_tau, n_r)
    theta = np.arange(n_theta) * (2.0 * np.pi / n_theta)
    R, T = np.meshgrid(radii, theta, indexing="ij")
    Z = _surface_model_height(state, tau, R, T, rho_tau)
    verts = np.stack([R * np.cos(T), R * np.sin(T), Z], axis=-1).reshape(-1, 3)
    # downward graph normal (the CMC orientation of the matched pieces)
    eps = 1e-6 * rho_tau
    Zr = (_surface_model_height(state, tau, R + eps, T, rho_tau)
          - _surface_model_height(state, tau, R - eps, T, rho_tau)) / (2 * eps)
    Zt = (_surface_model_height(state, tau, R, T + eps, rho_tau)
          - _surface_model_height(state, tau, R, T - eps, rho_tau)) / (2 * eps)
    ux = Zr * np.cos(T) - Zt * np.sin(T) / R
    uy = Zr * np.sin(T) + Zt * np.cos(T) / R
    w = np.sqrt(1.0 + ux * ux + uy * uy)
    normals = np.stack([ux / w, uy / w, -1.0 / w], axis=-1).reshape(-1, 3)
    faces = _grid_faces(n_r, n_theta, wrap=True)
    faces = _orient_outward(verts, faces, normals)
    return SurfaceMesh(verts, faces, normals, ["collar"] * len(verts))


def assemble_glued_mesh(tau: float, base: str = "sphere",
                        base_tau: float | None = None,
                        resolution: int = 64, n_periods: float = 2.0,
                        truncation: int = DEFAULT_TRUNCATION,
                        tol: float = 1e-10,
                        axis=None) -> GluedMesh:
    """Composite mesh: base with a disk removed, matched collar, Delaunay end.

    The end's measured boundary remainder is matched against zero base-side
    corrections, which fixes (t, a0); the base is deformed by the matched
    log/harmonic model (faded out at macroscopic radius), the collar annulus
    [rho_tau, 2 rho_tau] carries the matched graph, and the half-Delaunay mesh
    is shifted so its boundary circle lands on the collar's inner edge.  The
    quality report records the polyline gaps at both junctions; the outer gap
    is the unmatched correction remainder and scales like tau^3.
    """
    if base not in ("sphere", "delaunay"):
        raise ParameterOutOfRangeError(f"unknown base {base!r}")
    if abs(tau) > 0.3:
        raise ParameterOutOfRangeError(
            f"gluing is a small-necksize construction; |tau|={abs(tau)} > 0.3"
        )
    profile = cached_profile(tau, tol)
    if profile.s_tau <= 0.0:
        raise ParameterOutOfRangeError("gluing needs tau != 1")
    ddata = delaunay_boundary_data(profile, truncation)
    dcorr = (ddata.dirichlet_remainder(), ddata.neumann_remainder())
    match = match_cauchy_data(dcorr, None, tau, profile)
    state = match.state
    rho_t = match.r_tau
    graph = DelaunayGraph(profile)

    # delaunay end: isothermal cells kept square to match the theta spacing
    n_theta = max(16, resolution)
    s_min = -profile.s_tau
    s_max = s_min + n_periods * profile.period
    ds = 2.0 * np.pi / n_theta
    n_s = int(min(max(resolution, math.ceil((s_max - s_min) / ds) + 1), 4096))
    end = mesh_delaunay(profile, s_min, s_max, n_s, n_theta)
    end.vertices = end.vertices.copy()
    end.vertices[:, 2] += graph.shift

    collar = _collar_mesh(state, tau, rho_t, resolution)

    if base == "sphere":
        alpha_in = math.asin(min(1.0, 2.0 * rho_t))
        alpha_out = math.pi / 6.0

        def fade(alpha):
            x = (np.log(np.sin(np.clip(alpha, alpha_in, alpha_out)))
                 - math.log(math.sin(alpha_in))) \
                / (math.log(math.sin(alpha_out)) - math.log(math.sin(alpha_in)))
            return 1.0 - _quintic_step(x)

        def pert(rho, theta):
            return _surface_model_height(state, tau, rho, theta, rho_t)

        base_mesh = _sphere_base_mesh(2.0 * rho_t, resolution, pert, fade)
        base_height = lambda rho: -1.0 + np.sqrt(np.maximum(1.0 - rho * rho,
                                                            0.0))
    else:
        if base_tau is None:
            raise InvalidParameterError("base='delaunay' requires base_tau")
        base_mesh, base_height = _delaunay_base_mesh(base_tau, rho_t,
                                                     resolution, tol)

    mesh = end.concatenated_with(collar).concatenated_with(base_mesh)
    if axis is not None:
        mesh = _rotate_composite(mesh, np.asarray(axis, dtype=float))

    # junction gaps, measured on the unblended models
    theta = np.arange(n_theta) * (2.0 * np.pi / n_theta)
    inner_gap = float(np.max(np.abs(
        _surface_model_height(state, tau, np.full_like(theta, rho_t), theta,
                              rho_t)
        - graph.height_at_s(-profile.s_tau))))
    outer_model = _surface_model_height(
        state, tau, np.full_like(theta, 2.0 * rho_t), theta, rho_t)
    outer_gap = float(np.max(np.abs(outer_model - base_height(2.0 * rho_t))))
    inner_z = float(graph.height_at_s(-profile.s_tau))
    outer_z = float(np.mean(outer_model))
    report = {
        "tau": tau,
        "r_tau": rho_t,
        "collar_log_coefficient": -_sgn(tau) * state.tau_tilde(tau) ** 2 / 4,
        "t": state.t,
        "a0": state.a0,
        "interface_mismatch_inner": inner_gap,
        "interface_mismatch_outer": outer_gap,
        "interface_mismatch": max(inner_gap, outer_gap),
        "matching_residual": max(match.residual_dirichlet,
                                 match.residual_neumann),
        "junction_circles": [(rho_t, inner_z), (2.0 * rho_t, outer_z)],
    }
    return GluedMesh(mesh=mesh, state=state, report=report)


def _delaunay_base_mesh(base_tau: float, rho_cut: float, resolution: int,
                        tol: float):
    """Delaunay base with an (s, theta) metric disk removed at a bulge point.

    The attachment point is the bulge equator X(4 s_tau, 0); the removed disk
    uses the local conformal factor, and the base is left unperturbed (the
    leading-order deformation model is only wired for the sphere base).
    """
    prof = cached_profile(base_tau, tol)
    if prof.s_tau <= 0.0:
        raise InvalidParameterError("base profile must have tau != 1")
    s_p = 4.0 * prof.s_tau
    conf = abs(prof.radius(s_p))
    half = rho_cut / conf
    n_theta = max(16, resolution)
    s_lo, s_hi = s_p - prof.period, s_p + prof.period
    n_s = max(resolution, 64)
    s = np.linspace(s_lo, s_hi, n_s)
    mesh = mesh_delaunay(prof, s_lo, s_hi, n_s, n_theta)
    keep = []
    for idx in range(len(mesh.vertices)):
        i, j = divmod(idx, n_theta)
        th = j * 2.0 * np.pi / n_theta
        dth = min(abs(th - 0.0), 2 * np.pi - th)
        if (s[i] - s_p) ** 2 + dth ** 2 > half ** 2:
            keep.append(idx)
    keep = np.asarray(keep, dtype=np.int64)
    remap = -np.ones(len(mesh.vertices), dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    fmask = np.all(remap[mesh.faces] >= 0, axis=1)
    base = SurfaceMesh(mesh.vertices[keep], remap[mesh.faces[fmask]],
                       mesh.vertex_normals[keep], ["base"] * len(keep))

    def height(rho):
        return 0.0  # junction bookkeeping is only modeled for the sphere

    return base, height


def _rotate_composite(mesh: SurfaceMesh, axis: np.ndarray) -> SurfaceMesh:
    """Rigid motion sending the +z gluing axis to the requested direction."""
    axis = axis / np.linalg.norm(axis)
    z = np.array([0.0, 0.0, 1.0])
    v = np.cross(z, axis)
    c = float(np.dot(z, axis))
    if np.linalg.norm(v) < 1e-15:
        R = np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    else:
        vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
        R = np.eye(3) + vx + vx @ vx * (1.0 / (1.0 + c))
    return SurfaceMesh((R @ mesh.vertices.T).T, mesh.faces,
                       (R @ mesh.vertex_normals.T).T, list(mesh.region_tags))


def composite_quality(glued: GluedMesh, exclusion_radii: float = 3.0) -> dict:
    """Discrete-curvature quality of a composite, away from the interface.

    Excludes mesh-boundary vertices, the collar, and everything within
    ``exclusion_radii`` * r_tau of either junction circle, then reports the
    max deviation of the cotangent mean curvature from 1.
    """
    mesh = glued.mesh
    rho_t = glued.report["r_tau"]
    curv = discrete_mean_curvature(mesh)
    tags = np.asarray(glued.mesh.region_tags)
    keep = ~curv.is_boundary & (tags != "collar")
    margin = exclusion_radii * rho_t
    rho = np.linalg.norm(mesh.vertices[:, :2], axis=1)
    z = mesh.vertices[:, 2]
    for ring_rho, ring_z in glued.report["junction_circles"]:
        dist = np.hypot(rho - ring_rho, z - ring_z)
        keep &= dist > margin
    values = curv.values[keep]
    err = float(np.max(np.abs(values - 1.0))) if len(values) else float("nan")
    out = dict(glued.report)
    out["interior_H_error"] = err
    out["interior_vertices"] = int(keep.sum())
    return out
