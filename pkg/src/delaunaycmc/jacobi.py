"""Jacobi operator of a Delaunay surface: mode reduction and Floquet data.

The flattened Jacobi operator is L = d_s^2 + d_theta^2 + tau^2 cosh(2 sigma);
separating e^{i j theta} gives the Hill operators

    L_j = d_s^2 + q_j(s),    q_j(s) = tau^2 cosh(2 sigma(s)) - j^2,

whose potential has period 4 s_tau (half the sigma period, by evenness).  The
period map T_j of L_j has determinant one, its eigenvalues come in reciprocal
pairs e^{+-4 zeta s_tau}, and gamma = Re zeta >= 0 is the indicial root.

Strongly hyperbolic modes overflow double precision if the period map is
accumulated naively: the determinant of the assembled matrix loses all digits
to cancellation once the growth exceeds ~e^18.  The period map is therefore
computed as a product of subinterval transfer matrices; the determinant of the
product is the product of the well-conditioned subinterval determinants, and
decaying Floquet solutions are integrated backward (their stable direction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .delaunay_profile import DelaunayParam, DelaunayProfile, solve_profile, \
    sigma_at_waist
from .errors import (
    DegeneratePeriodError,
    IntegrationFailureError,
    InvalidParameterError,
    NotHyperbolicError,
    WindowTooShortError,
)

#: band half-width on |trace| - 2 separating the parabolic case
TRACE_BAND = 1e-6

JACOBI_FIELD_KINDS = {
    "trans_axis": (0, "+"),
    "trans_x": (1, "+"),
    "trans_y": (-1, "+"),
    "rot_x": (1, "-"),
    "rot_y": (-1, "-"),
    "delaunay_param": (0, "-"),
}


@dataclass(frozen=True)
class ModePotential:
    """Sampled/evaluable potential q_j(s) = tau^2 cosh(2 sigma) - j^2."""

    profile: DelaunayProfile
    j: int

    @property
    def period(self) -> float:
        return 4.0 * self.profile.s_tau

    def __call__(self, s):
        sigma = self.profile.sigma(s)
        tau = self.profile.tau
        return tau * tau * np.cosh(2.0 * sigma) - self.j * self.j


def mode_potential(profile: DelaunayProfile, j: int) -> ModePotential:
    if j < 0:
        raise InvalidParameterError("mode index j must be >= 0")
    return ModePotential(profile=profile, j=int(j))


# -- geometric Jacobi fields --------------------------------------------------

@dataclass(frozen=True)
class JacobiField:
    """theta-profile phi of a geometric Jacobi field Phi = phi(s) {1,cos,sin}.

    phi and its closed-form second derivative are sampled on ``s``; the mode
    residual phi'' + q_{|j|} phi vanishes analytically for the five Killing
    projections and to O(dtau^2) for the necksize variation.
    """

    kind: str
    j: int
    s: np.ndarray
    phi: np.ndarray
    d2phi: np.ndarray

    def residual(self) -> np.ndarray:
        tau = self._tau
        sigma = self._sigma
        q = tau * tau * np.cosh(2.0 * sigma) - self.j * self.j
        return self.d2phi + q * self.phi

    @property
    def sup_residual(self) -> float:
        return float(np.max(np.abs(self.residual())))

    # stashed by the constructor functions
    _tau: float = 0.0
    _sigma: np.ndarray = None


def _killing_profiles(profile: DelaunayProfile, kind: str, s: np.ndarray):
    """Closed-form phi and phi'' for the five Killing-field projections."""
    tau = profile.tau
    t2 = tau * tau
    sigma, ds, d2s, kappa, dkappa = profile.evaluate(s)
    C, S = np.cosh(sigma), np.sinh(sigma)
    d3s = -t2 * np.cosh(2.0 * sigma) * ds
    if kind == "trans_axis":
        if tau > 0:
            phi, d2phi = ds, d3s
        else:
            phi, d2phi = -ds, -d3s
    elif kind in ("trans_x", "trans_y"):
        if tau > 0:
            phi = -tau * C
            d2phi = -tau * (C * ds**2 + S * d2s)
        else:
            phi = tau * S
            d2phi = tau * (S * ds**2 + C * d2s)
    elif kind in ("rot_x", "rot_y"):
        e = np.exp(sigma)
        d2kappa = t2 * np.exp(2.0 * sigma) * ds  # both signs
        if tau > 0:
            phi = -(tau / 2.0) * (kappa * C + e * ds)
            d2phi = -(tau / 2.0) * (
                d2kappa * C + 2.0 * dkappa * S * ds
                + kappa * (C * ds**2 + S * d2s)
                + e * (ds**3 + 3.0 * ds * d2s + d3s)
            )
        else:
            phi = (tau / 2.0) * (kappa * S + e * ds)
            d2phi = (tau / 2.0) * (
                d2kappa * S + 2.0 * dkappa * C * ds
                + kappa * (S * ds**2 + C * d2s)
                + e * (ds**3 + 3.0 * ds * d2s + d3s)
            )
    else:  # pragma: no cover
        raise InvalidParameterError(f"unknown Killing kind {kind}")
    return phi, d2phi, sigma


def _variation_profiles(profile: DelaunayProfile, s: np.ndarray,
                        dtau_rel: float):
    """phi and phi'' for the necksize-variation field by centered differences.

    phi(s) = d/dtau [X_tau(s, theta)] . N_tau(s, theta), computed from
    profiles at tau(1 +- dtau_rel); all s-derivatives use the closed forms of
    each member profile, so the residual is dominated by the O(dtau^2)
    difference error alone.
    """
    tau = profile.tau
    if tau == 1.0:
        # one-sided family boundary: second-order backward difference
        d = dtau_rel
        taus = (1.0, 1.0 - d, 1.0 - 2.0 * d)
        weights = (3.0 / (2.0 * d), -4.0 / (2.0 * d), 1.0 / (2.0 * d))
    else:
        d = dtau_rel * abs(tau)
        taus = (tau + d, tau - d)
        weights = (1.0 / (2.0 * d), -1.0 / (2.0 * d))
        if taus[0] > 1.0 or taus[0] == 0.0 or taus[1] == 0.0:
            raise InvalidParameterError(
                f"tau={tau} too close to the family boundary for step {d}"
            )

    def member(t):
        if t == profile.tau:
            return profile
        return solve_profile(DelaunayParam(t, profile.param.tau_star),
                             profile.tol)

    # radial/vertical difference quotients and their s-derivatives
    dR = np.zeros_like(s, dtype=float)
    dR1 = np.zeros_like(dR)
    dR2 = np.zeros_like(dR)
    dZ = np.zeros_like(dR)
    dZ1 = np.zeros_like(dR)
    dZ2 = np.zeros_like(dR)
    for t, w in zip(taus, weights):
        p = member(t)
        sig, ds, d2s, kap, dkap = p.evaluate(s)
        r = 0.5 * t * np.exp(sig)
        d2kap = t * t * np.exp(2.0 * sig) * ds
        dR += w * r
        dR1 += w * r * ds
        dR2 += w * r * (ds**2 + d2s)
        dZ += w * 0.5 * kap
        dZ1 += w * 0.5 * dkap
        dZ2 += w * 0.5 * d2kap

    sigma, ds, d2s, _, _ = profile.evaluate(s)
    C, S = np.cosh(sigma), np.sinh(sigma)
    d3s = -tau * tau * np.cosh(2.0 * sigma) * ds
    if tau > 0:
        a, a1, a2 = -tau * C, -tau * S * ds, -tau * (C * ds**2 + S * d2s)
        b, b1, b2 = ds, d2s, d3s
    else:
        a, a1, a2 = tau * S, tau * C * ds, tau * (S * ds**2 + C * d2s)
        b, b1, b2 = -ds, -d2s, -d3s
    phi = a * dR + b * dZ
    d2phi = (a2 * dR + 2.0 * a1 * dR1 + a * dR2
             + b2 * dZ + 2.0 * b1 * dZ1 + b * dZ2)
    return phi, d2phi, sigma


def geometric_jacobi(profile: DelaunayProfile, kind: str, s=None,
                     dtau_rel: float = 1e-4) -> JacobiField:
    """One of the six geometric Jacobi fields, sampled with closed forms.

    Kinds: translations ``trans_axis`` (j=0, phi = sigma'), ``trans_x`` /
    ``trans_y`` (j = +-1, phi = -tau cosh sigma for unduloids), rotations
    ``rot_x`` / ``rot_y`` (j = +-1, linearly growing), and ``delaunay_param``
    (j=0, necksize variation by centered differences in tau).  For tau = 1 the
    axis translation projects to zero identically.
    """
    if kind not in JACOBI_FIELD_KINDS:
        raise InvalidParameterError(
            f"unknown Jacobi field kind {kind!r}; "
            f"expected one of {sorted(JACOBI_FIELD_KINDS)}"
        )
    j_signed, _ = JACOBI_FIELD_KINDS[kind]
    if s is None:
        period = profile.period if profile.s_tau > 0 else 2.0 * np.pi
        s = np.linspace(0.0, period, 2001)
    s = np.asarray(s, dtype=float)
    if kind == "delaunay_param":
        phi, d2phi, sigma = _variation_profiles(profile, s, dtau_rel)
    else:
        phi, d2phi, sigma = _killing_profiles(profile, kind, s)
    return JacobiField(kind=kind, j=abs(j_signed), s=s,
                       phi=np.asarray(phi), d2phi=np.asarray(d2phi),
                       _tau=profile.tau, _sigma=np.asarray(sigma))


# -- monodromy ----------------------------------------------------------------

@dataclass(frozen=True)
class MonodromyResult:
    """Period map of L_j over one potential period 4 s_tau with Floquet data.

    ``det_T`` is accumulated as the product of subinterval determinants, the
    numerically faithful evaluation of the Wronskian invariant.  ``gamma`` is
    the indicial root |ln |lambda+|| / (4 s_tau); within the parabolic band it
    is zero by classification (the only values consistent with det T = 1).
    """

    j: int
    T: np.ndarray
    det_T: float
    trace_T: float
    eigenvalues: tuple
    zeta: complex
    gamma: float
    classification: str
    period: float


def _coupled_rhs(tau: float, j: int):
    t2 = tau * tau
    jj = float(j * j)

    def rhs(s, y):
        sig, dsig, w1, dw1, w2, dw2 = y
        q = t2 * math.cosh(2.0 * sig) - jj
        return (dsig, -t2 * math.cosh(sig) * math.sinh(sig),
                dw1, -q * w1, dw2, -q * w2)

    return rhs


def _transfer_chain(profile: DelaunayProfile, j: int, tol: float):
    """Subinterval transfer matrices of L_j over [0, 4 s_tau].

    sigma is integrated alongside the mode equation from its exact waist data,
    so the potential carries no interpolation error.  Subintervals are sized so
    each local transfer matrix has moderate norm (growth at most ~e^2).
    """
    tau = profile.tau
    period = 4.0 * profile.s_tau
    n_sub = max(1, int(math.ceil((j + 1) * period / 2.0)))
    edges = np.linspace(0.0, period, n_sub + 1)
    rtol = min(max(tol * 1e-3, 1e-13), 1e-8)
    rhs = _coupled_rhs(tau, j)
    sig, dsig = sigma_at_waist(tau), 0.0
    matrices = []
    for a, b in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(rhs, (a, b), [sig, dsig, 1.0, 0.0, 0.0, 1.0],
                        method="DOP853", rtol=rtol, atol=rtol * 1e-2)
        if sol.status != 0:
            raise IntegrationFailureError(
                f"monodromy integration failed (tau={tau}, j={j}): "
                f"{sol.message}"
            )
        y = sol.y[:, -1]
        sig, dsig = float(y[0]), float(y[1])
        matrices.append(np.array([[y[2], y[4]], [y[3], y[5]]]))
    return matrices, period


def monodromy(profile: DelaunayProfile, j: int, tol: float = 1e-10,
              trace_band: float = TRACE_BAND) -> MonodromyResult:
    """Period map T_j with eigenvalues, Floquet exponent and classification.

    Classification: hyperbolic if |trace| > 2 + band, elliptic if
    |trace| < 2 - band, parabolic otherwise.
    """
    if profile.s_tau <= 0.0:
        raise DegeneratePeriodError(
            "tau = 1 has s_tau = 0; the period map is undefined"
        )
    if j < 0:
        raise InvalidParameterError("mode index j must be >= 0")
    if tol <= 0:
        raise InvalidParameterError("tol must be positive")
    matrices, period = _transfer_chain(profile, j, tol)
    T = np.eye(2)
    det = 1.0
    for M in matrices:
        T = M @ T
        det *= float(np.linalg.det(M))
    trace = float(np.trace(T))
    gap = abs(trace) - 2.0
    if gap > trace_band:
        classification = "hyperbolic"
        lam_big = (abs(trace) + math.sqrt(trace * trace - 4.0 * det)) / 2.0
        lam_big = math.copysign(lam_big, trace)
        lam_small = det / lam_big
        gamma = abs(math.log(abs(lam_big))) / period
        zeta = complex(gamma, 0.0 if lam_big > 0 else math.pi / period)
        eigenvalues = (complex(lam_big), complex(lam_small))
    elif gap < -trace_band:
        classification = "elliptic"
        # unit-modulus conjugate pair: zeta purely imaginary, gamma = 0
        theta = math.acos(max(-1.0, min(1.0, trace / 2.0)))
        eigenvalues = (complex(math.cos(theta), math.sin(theta)),
                       complex(math.cos(theta), -math.sin(theta)))
        gamma = 0.0
        zeta = complex(0.0, theta / period)
    else:
        classification = "parabolic"
        lam = 1.0 if trace > 0 else -1.0
        eigenvalues = (complex(lam), complex(lam))
        gamma = 0.0
        zeta = complex(0.0, 0.0 if lam > 0 else math.pi / period)
    return MonodromyResult(j=int(j), T=T, det_T=det, trace_T=trace,
                           eigenvalues=eigenvalues, zeta=zeta, gamma=gamma,
                           classification=classification, period=period)


def indicial_spectrum(profile: DelaunayProfile, j_max: int,
                      tol: float = 1e-10):
    """Indicial roots [(j, gamma_j)] for j = 0..j_max, sorted by j."""
    if j_max < 0:
        raise InvalidParameterError("j_max must be >= 0")
    return [(j, monodromy(profile, j, tol).gamma) for j in range(j_max + 1)]


# -- exponential Floquet solutions --------------------------------------------

@dataclass(frozen=True)
class ExponentialSolution:
    """Sampled Floquet solution with Psi(s + 4 s_tau) = lambda Psi(s)."""

    j: int
    sign: str
    s: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    lam: float
    gamma: float
    period: float

    def floquet_defect(self) -> float:
        """sup over the first period of |Psi(s + 4 s_tau) - lambda Psi(s)|,
        relative to the local solution size."""
        n = len(self.s) // 2
        lhs = self.w[n:2 * n]
        rhs = self.lam * self.w[:n]
        scale = np.maximum(np.abs(lhs), np.abs(rhs)).max()
        return float(np.max(np.abs(lhs - rhs)) / scale)


def _dominant_eigvec(M: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eig(M)
    v = V[:, int(np.argmax(np.abs(w)))]
    v = np.real(v)
    # normalize to Psi(0) = 1 when the value component allows it
    if abs(v[0]) > 1e-12 * np.linalg.norm(v):
        v = v / v[0]
    else:
        v = v / np.linalg.norm(v)
    return v


def exponential_solution(profile: DelaunayProfile, j: int, sign: str,
                         tol: float = 1e-10,
                         n_per_period: int = 512) -> ExponentialSolution:
    """Exponentially growing (+) or decaying (-) solution over [0, 8 s_tau].

    Initial data is the corresponding eigenvector of the period map.  The
    growing solution integrates forward; the decaying one would be swamped by
    the growing mode, so it is integrated backward from lambda^2 v at
    s = 8 s_tau, which is its numerically stable direction.
    """
    if sign not in ("+", "-"):
        raise InvalidParameterError("sign must be '+' or '-'")
    mono = monodromy(profile, j, tol)
    if mono.classification != "hyperbolic":
        raise NotHyperbolicError(
            f"mode j={j} is {mono.classification}; no exponential splitting"
        )
    T = mono.T
    lam_p, lam_m = (ev.real for ev in mono.eigenvalues)
    period = mono.period
    two = 2.0 * period
    s = np.linspace(0.0, two, 2 * n_per_period)
    rtol = min(max(tol * 1e-3, 1e-13), 1e-8)
    rhs = _coupled_rhs(profile.tau, j)
    if sign == "+":
        v = _dominant_eigvec(T)
        lam = lam_p
        y0 = [sigma_at_waist(profile.tau), 0.0, v[0], v[1], 0.0, 1.0]
        sol = solve_ivp(rhs, (0.0, two), y0, method="DOP853", rtol=rtol,
                        atol=rtol * 1e-2, dense_output=True)
        if sol.status != 0:
            raise IntegrationFailureError(sol.message)
        vals = sol.sol(s)
    else:
        # eigenvector for lambda-: dominant eigenvector of the adjugate
        adj = np.array([[T[1, 1], -T[0, 1]], [-T[1, 0], T[0, 0]]])
        v = _dominant_eigvec(adj)
        lam = lam_m
        scale = lam * lam
        # sigma at 8 s_tau equals its waist data by periodicity
        y0 = [sigma_at_waist(profile.tau), 0.0, scale * v[0], scale * v[1],
              0.0, 1.0]
        sol = solve_ivp(rhs, (two, 0.0), y0, method="DOP853", rtol=rtol,
                        atol=rtol * 1e-2, dense_output=True)
        if sol.status != 0:
            raise IntegrationFailureError(sol.message)
        vals = sol.sol(s)
    return ExponentialSolution(j=int(j), sign=sign, s=s, w=vals[2],
                               dw=vals[3], lam=float(lam), gamma=mono.gamma,
                               period=period)


# -- weighted norms ------------------------------------------------------------

def weighted_norm(s, values, mu: float) -> float:
    """Discrete exponentially weighted sup norm on a half-line window.

    Grid analog of sup_{s >= s0} e^{-mu s} sup_{[s, s+1]} |w|: for every
    sample point taken as the start of a unit subinterval, the local sup of
    |values| over that subinterval is weighted by e^{-mu s} and the maximum is
    returned.  The window must span at least two unit subintervals.
    """
    s = np.asarray(s, dtype=float)
    values = np.asarray(values, dtype=float)
    if s.ndim != 1 or s.shape != values.shape or len(s) < 2:
        raise WindowTooShortError("need matching 1-d sample arrays")
    if s[-1] - s[0] < 2.0:
        raise WindowTooShortError(
            f"window [{s[0]}, {s[-1]}] shorter than two unit subintervals"
        )
    out = 0.0
    absvals = np.abs(values)
    ends = np.searchsorted(s, s + 1.0, side="right")
    for i, j in enumerate(ends):
        if j <= i:
            continue
        local = float(np.max(absvals[i:j]))
        out = max(out, math.exp(-mu * s[i]) * local)
    return out
