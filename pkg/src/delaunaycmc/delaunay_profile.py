"""Generating data of Delaunay surfaces.

Solves the first-order system for the conformal profile function sigma and the
height integral kappa of a Delaunay surface with necksize parameter tau,

    unduloids (0 < tau <= 1):   sigma'^2 + tau^2 cosh^2 sigma = 1,
                                kappa'  = tau^2 e^sigma cosh sigma,
    nodoids   (tau < 0):        sigma'^2 + tau^2 sinh^2 sigma = 1,
                                kappa'  = tau^2 e^sigma sinh sigma,

with sigma'(0) = 0, kappa(0) = 0 and sigma(0) at the waist.  sigma is even and
periodic with period 8*s_tau; kappa is odd and quasi-periodic.  The half-period
quantities (t_tau, s_tau) come from a singularity-free quadrature, and the ODE
is integrated with an adaptive high-order Runge-Kutta scheme whose accuracy is
certified independently by the conserved first integral.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline

from .errors import (
    InvalidParameterError,
    IntegrationFailureError,
    QuadratureFailureError,
)

TAU_STAR_DEFAULT = -math.sqrt(2.0)

PROFILE_SCHEMA_VERSION = 1

# grid resolution for the stored one-period sample table
_SAMPLES_PER_UNIT = 512
_MIN_SAMPLES = 4097
_MAX_SAMPLES = 65537


def _sign(tau: float) -> float:
    return 1.0 if tau > 0 else -1.0


@dataclass(frozen=True)
class DelaunayParam:
    """Dimensionless necksize parameter of a Delaunay surface.

    Valid range is (tau_star, 0) for nodoids and (0, 1] for unduloids, where
    tau_star <= -sqrt(2) guards the range on which the j >= 2 mode operators
    keep positive indicial roots.
    """

    tau: float
    tau_star: float = TAU_STAR_DEFAULT

    def __post_init__(self):
        tau = self.tau
        if not np.isfinite(tau) or tau == 0.0:
            raise InvalidParameterError(f"tau must be nonzero and finite, got {tau}")
        if tau > 0 and tau > 1.0:
            raise InvalidParameterError(f"tau={tau} outside (0, 1]")
        if tau < 0 and tau <= self.tau_star:
            raise InvalidParameterError(
                f"tau={tau} outside ({self.tau_star}, 0)"
            )

    @property
    def sign(self) -> float:
        return _sign(self.tau)


@dataclass(frozen=True)
class NeckGeometry:
    """Waist radius, boundary radius and the vertical positioning shift.

    r0 and r_tau are signed: the radius function r(s) = (tau/2) e^{sigma(s)}
    is negative for nodoids, which realizes the orientation reversal of the
    immersion as a half-turn in theta.  The translation is the conventional
    vertical shift (tau^2/4) log(4/tau^2), signed like tau, that positions the
    boundary circle of the half surface near the height of its limit plane.
    """

    r0: float
    r_tau: float
    translation: float


class DelaunayProfile:
    """Solved generating data of D_tau, evaluable on all of R.

    The profile stores one period of (s, sigma, sigma', kappa) samples and
    interpolates them with cubic splines; sigma'' and kappa' are always
    returned from the closed forms
        sigma'' = -tau^2 cosh(sigma) sinh(sigma)
        kappa'  = tau^2 e^sigma cosh(sigma)   (tau > 0; sinh for tau < 0)
    rather than by differentiating the interpolant.  tau = 1 is the cylinder
    sigma == 0, kappa == s, kept in closed form with a degenerate one-row
    sample table.  Instances are immutable and safe to share between threads.
    """

    interpolation_order = 3

    def __init__(self, param: DelaunayParam, t_tau: float, s_tau: float,
                 samples: np.ndarray, tol: float):
        self.param = param
        self.t_tau = float(t_tau)
        self.s_tau = float(s_tau)
        self.samples = np.asarray(samples, dtype=float)
        self.samples.setflags(write=False)
        self.tol = float(tol)
        self._is_cylinder = (param.tau == 1.0)
        if not self._is_cylinder:
            s, sig, dsig, kap = self.samples.T
            period = 8.0 * self.s_tau
            self.kappa_shift = float(kap[-1])
            # enforce exact endpoint matching (solver residual ~ tol) so the
            # periodic splines are well posed
            sig = sig.copy()
            dsig = dsig.copy()
            sig[-1] = sig[0]
            dsig[-1] = dsig[0]
            kap_per = kap - (self.kappa_shift / period) * s
            kap_per[-1] = kap_per[0]
            self._sigma = CubicSpline(s, sig, bc_type="periodic")
            self._dsigma = CubicSpline(s, dsig, bc_type="periodic")
            self._kappa_per = CubicSpline(s, kap_per, bc_type="periodic")
        else:
            self.kappa_shift = 0.0

    # -- basic descriptors -------------------------------------------------

    @property
    def tau(self) -> float:
        return self.param.tau

    @property
    def period(self) -> float:
        return 8.0 * self.s_tau

    def __repr__(self):
        return (f"DelaunayProfile(tau={self.tau}, t_tau={self.t_tau:.6g}, "
                f"s_tau={self.s_tau:.6g}, n_samples={len(self.samples)})")

    # -- evaluation --------------------------------------------------------

    def evaluate(self, s):
        """Return (sigma, sigma', sigma'', kappa, kappa') at arbitrary s.

        Vectorized over s.  sigma is extended periodically, kappa
        quasi-periodically: kappa(s + 8 s_tau) = kappa(s) + kappa_shift.
        """
        s = np.asarray(s, dtype=float)
        tau = self.tau
        if self._is_cylinder:
            zero = np.zeros_like(s)
            return zero, zero, zero, s.copy(), np.ones_like(s)
        period = self.period
        wraps = np.floor(s / period)
        sm = s - wraps * period
        sigma = self._sigma(sm)
        dsigma = self._dsigma(sm)
        d2sigma = -tau * tau * np.cosh(sigma) * np.sinh(sigma)
        kappa = self._kappa_per(sm) + (self.kappa_shift / period) * sm \
            + wraps * self.kappa_shift
        if tau > 0:
            dkappa = tau * tau * np.exp(sigma) * np.cosh(sigma)
        else:
            dkappa = tau * tau * np.exp(sigma) * np.sinh(sigma)
        return sigma, dsigma, d2sigma, kappa, dkappa

    def sigma(self, s):
        return self.evaluate(s)[0]

    def radius(self, s):
        """Signed radius r(s) = (tau/2) e^{sigma(s)} (negative for nodoids)."""
        return (self.tau / 2.0) * np.exp(self.sigma(s))

    def first_integral_residual(self) -> float:
        """sup over the stored samples of |sigma'^2 + tau^2 {cosh,sinh}^2 sigma - 1|."""
        if self._is_cylinder:
            return 0.0
        _, sig, dsig, _ = self.samples.T
        tau = self.tau
        hyp = np.cosh(sig) if tau > 0 else np.sinh(sig)
        return float(np.max(np.abs(dsig**2 + tau * tau * hyp**2 - 1.0)))

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "schema_version": PROFILE_SCHEMA_VERSION,
            "tau": self.tau,
            "tau_star": self.param.tau_star,
            "tol": self.tol,
            "t_tau": self.t_tau,
            "s_tau": self.s_tau,
            "grid": [[float(v) for v in row] for row in self.samples],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DelaunayProfile":
        doc = json.loads(text)
        if doc.get("schema_version") != PROFILE_SCHEMA_VERSION:
            raise InvalidParameterError(
                f"unsupported profile schema: {doc.get('schema_version')}"
            )
        param = DelaunayParam(doc["tau"], doc.get("tau_star", TAU_STAR_DEFAULT))
        return cls(param, doc["t_tau"], doc["s_tau"],
                   np.asarray(doc["grid"], dtype=float), doc.get("tol", 1e-10))


# -- half period -----------------------------------------------------------

def _first_integral_gap(tau: float):
    """f(t) = 1 - tau^2 cosh^2 t (unduloid) or 1 - tau^2 sinh^2 t (nodoid)."""
    if tau > 0:
        return lambda t: 1.0 - tau * tau * np.cosh(t) ** 2
    return lambda t: 1.0 - tau * tau * np.sinh(t) ** 2


def sigma_at_waist(tau: float) -> float:
    """Initial value sigma(0): -arccosh(1/tau) for tau > 0, arcsinh(1/tau) else."""
    if tau > 0:
        return -math.acosh(1.0 / tau)
    return math.asinh(1.0 / tau)


def half_period(param: DelaunayParam, tol: float = 1e-10,
                cross_check: bool = True):
    """Compute (t_tau, s_tau) for the given necksize parameter.

    t_tau solves tau cosh t_tau = 1 (tau > 0) resp. tau sinh t_tau = -1
    (tau < 0), and s_tau is half the quadrature of 1/sqrt(1 - tau^2 cosh^2 t)
    over [0, t_tau] (sinh version for tau < 0).  The integrand has an
    inverse-square-root endpoint singularity which the substitution
    u^2 = t_tau - t removes exactly, restoring fast quadrature convergence.

    With cross_check=True the sigma ODE is integrated and the distance between
    consecutive minima is compared against 8*s_tau within 100*tol relative.
    """
    if tol <= 0:
        raise InvalidParameterError("tol must be positive")
    tau = param.tau
    if tau == 1.0:
        return 0.0, 0.0
    t_tau = math.acosh(1.0 / tau) if tau > 0 else math.asinh(-1.0 / tau)
    f = _first_integral_gap(tau)
    sqrt_t = math.sqrt(t_tau)

    def integrand(u):
        t = t_tau - u * u
        val = f(t)
        if val <= 0.0:
            # only reachable through roundoff at the endpoint
            return 2.0 / math.sqrt(abs(_dfdt_at_turning(tau, t_tau)))
        return 2.0 * u / math.sqrt(val)

    eps = max(tol * 1e-2, 1e-13)
    value, abserr = quad(integrand, 0.0, sqrt_t, epsabs=eps, epsrel=eps,
                         limit=200)
    if not np.isfinite(value) or abserr > 100 * eps * max(1.0, abs(value)):
        raise QuadratureFailureError(
            f"period quadrature failed for tau={tau}: err={abserr:.3e}"
        )
    s_tau = 0.5 * value
    if cross_check:
        measured = measure_period_ode(param, tol)
        rel = abs(measured - 8.0 * s_tau) / (8.0 * s_tau)
        if rel > 100 * tol:
            raise QuadratureFailureError(
                f"quadrature period 8*s_tau={8*s_tau!r} disagrees with the "
                f"ODE period {measured!r} (rel {rel:.3e}) for tau={tau}"
            )
    return t_tau, s_tau


def _dfdt_at_turning(tau: float, t_tau: float) -> float:
    if tau > 0:
        return -2.0 * tau * tau * math.cosh(t_tau) * math.sinh(t_tau)
    return -2.0 * tau * tau * math.sinh(t_tau) * math.cosh(t_tau)


def _ode_rhs(tau: float):
    t2 = tau * tau
    if tau > 0:
        def rhs(s, y):
            sig, dsig, _ = y
            return (dsig, -t2 * math.cosh(sig) * math.sinh(sig),
                    t2 * math.exp(sig) * math.cosh(sig))
    else:
        def rhs(s, y):
            sig, dsig, _ = y
            return (dsig, -t2 * math.cosh(sig) * math.sinh(sig),
                    t2 * math.exp(sig) * math.sinh(sig))
    return rhs


def _ivp_tols(tol: float):
    rtol = min(max(tol * 1e-2, 1e-13), 1e-8)
    return rtol, rtol * 0.1


def measure_period_ode(param: DelaunayParam, tol: float = 1e-10) -> float:
    """Period of sigma measured from the ODE as the first return to a minimum.

    Independent of the quadrature route: integrates from the waist and locates
    the next upward zero crossing of sigma' by event detection.
    """
    tau = param.tau
    if tau == 1.0:
        return 0.0
    # crude a-priori bound on the period: 8*(t_tau + |log tau^2|) is generous
    t_tau = math.acosh(1.0 / tau) if tau > 0 else math.asinh(-1.0 / tau)
    horizon = 12.0 * (t_tau + abs(math.log(tau * tau)) + 1.0)
    rtol, atol = _ivp_tols(tol)

    def minimum(s, y):
        return y[1]
    minimum.direction = 1.0
    minimum.terminal = True

    sol = solve_ivp(_ode_rhs(tau), (0.0, horizon),
                    [sigma_at_waist(tau), 0.0, 0.0],
                    method="DOP853", rtol=rtol, atol=atol, events=minimum)
    if sol.status < 0 or len(sol.t_events[0]) == 0:
        raise IntegrationFailureError(
            f"could not locate the sigma period for tau={tau}: {sol.message}"
        )
    return float(sol.t_events[0][0])


def solve_profile(param: DelaunayParam, tol: float = 1e-10) -> DelaunayProfile:
    """Integrate the sigma/kappa ODEs over one period and build a profile.

    The first integral is monitored, not enforced: its drift over the period
    is an independent accuracy certificate and must stay below 10*tol.
    """
    if tol <= 0:
        raise InvalidParameterError("tol must be positive")
    tau = param.tau
    if tau == 1.0:
        samples = np.array([[0.0, 0.0, 0.0, 0.0]])
        return DelaunayProfile(param, 0.0, 0.0, samples, tol)
    t_tau, s_tau = half_period(param, tol, cross_check=True)
    period = 8.0 * s_tau
    n = int(min(max(_MIN_SAMPLES, math.ceil(period * _SAMPLES_PER_UNIT) + 1),
                _MAX_SAMPLES))
    grid = np.linspace(0.0, period, n)
    rtol, atol = _ivp_tols(tol)
    sol = solve_ivp(_ode_rhs(tau), (0.0, period),
                    [sigma_at_waist(tau), 0.0, 0.0],
                    method="DOP853", rtol=rtol, atol=atol, t_eval=grid)
    if sol.status != 0:
        raise IntegrationFailureError(
            f"profile integration failed for tau={tau}: {sol.message}"
        )
    samples = np.column_stack([grid, sol.y[0], sol.y[1], sol.y[2]])
    profile = DelaunayProfile(param, t_tau, s_tau, samples, tol)
    drift = profile.first_integral_residual()
    if drift > 10.0 * tol:
        raise IntegrationFailureError(
            f"first-integral drift {drift:.3e} exceeds 10*tol for tau={tau}"
        )
    return profile


@functools.lru_cache(maxsize=64)
def cached_profile(tau: float, tol: float = 1e-10) -> DelaunayProfile:
    """Memoized :func:`solve_profile`; safe because profiles are immutable."""
    return solve_profile(DelaunayParam(tau), tol)


def neck_geometry(profile: DelaunayProfile) -> NeckGeometry:
    """Waist radius r(0), boundary radius r(-s_tau) and the vertical shift.

    r0 has the closed form (1 - sqrt(1 - tau^2))/2 for unduloids; r_tau scales
    like tau^{3/2} in the singular limit.  For the cylinder both radii are 1/2.
    """
    tau = profile.tau
    t2 = tau * tau
    translation = _sign(tau) * (t2 / 4.0) * math.log(4.0 / t2)
    if tau == 1.0:
        return NeckGeometry(0.5, 0.5, translation)
    sig0 = sigma_at_waist(tau)
    r0 = (tau / 2.0) * math.exp(sig0)
    sig_b = float(profile.sigma(profile.s_tau))  # evenness: sigma(-s)=sigma(s)
    r_tau = (tau / 2.0) * math.exp(sig_b)
    return NeckGeometry(r0, r_tau, translation)


def waist_radius_closed_form(tau: float) -> float:
    """r(0) = (1 - sqrt(1 - tau^2))/2 for tau in (0,1]; signed analog for tau<0."""
    if tau > 0:
        return (1.0 - math.sqrt(1.0 - tau * tau)) / 2.0
    return (1.0 - math.sqrt(1.0 + tau * tau)) / 2.0
