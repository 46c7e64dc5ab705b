"""Harmonic extension operators on circles, diagonal in the Fourier basis.

All four operators act exactly on truncated Fourier data: interior and
exterior harmonic extensions of circle data scale mode n by (r/rho)^|n| and
(rho/r)^|n|, the half-cylinder Poisson operator scales by e^{-|n| s}, and the
Dirichlet-to-Neumann matching operator (difference of interior and exterior
normal derivatives) multiplies by 2|n|.  There is no discretization error
beyond the truncation itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidParameterError,
    LowModePresentError,
    NonzeroMeanError,
    TruncationMismatchError,
)

DEFAULT_TRUNCATION = 64

_MEAN_ZERO_ATOL = 1e-12


@dataclass(frozen=True)
class CircleFourier:
    """Truncated Fourier data sum_{|n| <= N} c_n e^{i n theta} on S^1.

    ``coeffs`` has length 2N+1 and is indexed by n + N.  Real-valued boundary
    functions satisfy c_{-n} = conj(c_n); the constructors used for measured
    data enforce this, but complex test data is allowed.
    """

    coeffs: np.ndarray
    N: int

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != (2 * self.N + 1,):
            raise InvalidParameterError(
                f"expected {2 * self.N + 1} coefficients, got {coeffs.shape}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, N: int = DEFAULT_TRUNCATION) -> "CircleFourier":
        return cls(np.zeros(2 * N + 1, dtype=complex), N)

    @classmethod
    def from_dict(cls, entries: dict, N: int = DEFAULT_TRUNCATION):
        c = np.zeros(2 * N + 1, dtype=complex)
        for n, val in entries.items():
            if abs(int(n)) > N:
                raise InvalidParameterError(f"mode {n} exceeds truncation {N}")
            c[int(n) + N] = val
        return cls(c, N)

    @classmethod
    def basis(cls, n: int, N: int = DEFAULT_TRUNCATION) -> "CircleFourier":
        """The single mode e^{i n theta}."""
        return cls.from_dict({n: 1.0}, N)

    @classmethod
    def from_samples(cls, values, N: int = DEFAULT_TRUNCATION):
        """Fourier coefficients of samples on the uniform theta grid."""
        values = np.asarray(values)
        m = len(values)
        if m < 2 * N + 1:
            raise InvalidParameterError(
                f"{m} samples cannot resolve truncation N={N}"
            )
        spec = np.fft.fft(values) / m
        c = np.zeros(2 * N + 1, dtype=complex)
        for n in range(-N, N + 1):
            c[n + N] = spec[n % m]
        return cls(c, N)

    # -- access --------------------------------------------------------------

    def coeff(self, n: int) -> complex:
        if abs(n) > self.N:
            return 0.0 + 0.0j
        return complex(self.coeffs[n + self.N])

    def with_coeff(self, n: int, value) -> "CircleFourier":
        c = self.coeffs.copy()
        c[n + self.N] = value
        return CircleFourier(c, self.N)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def evaluate(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        phases = np.exp(1j * np.outer(theta, self.modes))
        return phases @ self.coeffs

    def sup_norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def max_abs_coeff(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.N >= 0 else 0.0

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.coeffs
                                  - np.conj(self.coeffs[::-1]))) <= tol)

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other: "CircleFourier") -> "CircleFourier":
        _check_same_truncation(self, other)
        return CircleFourier(self.coeffs + other.coeffs, self.N)

    def __sub__(self, other: "CircleFourier") -> "CircleFourier":
        _check_same_truncation(self, other)
        return CircleFourier(self.coeffs - other.coeffs, self.N)

    def __mul__(self, scalar) -> "CircleFourier":
        return CircleFourier(self.coeffs * scalar, self.N)

    __rmul__ = __mul__

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> str:
        rows = [[int(n), float(c.real), float(c.imag)]
                for n, c in zip(self.modes, self.coeffs)]
        return json.dumps(rows)

    @classmethod
    def from_json(cls, text: str, N: int = None) -> "CircleFourier":
        rows = json.loads(text)
        modes = [int(r[0]) for r in rows]
        if N is None:
            N = max((abs(n) for n in modes), default=DEFAULT_TRUNCATION)
        out = {n: complex(r[1], r[2]) for n, r in zip(modes, rows)}
        return cls.from_dict(out, N)


def _check_same_truncation(a: CircleFourier, b: CircleFourier):
    if a.N != b.N:
        raise TruncationMismatchError(
            f"truncation orders differ: {a.N} vs {b.N}"
        )


def _require_mean_zero(h: CircleFourier, what: str):
    if abs(h.coeff(0)) > _MEAN_ZERO_ATOL * max(1.0, h.max_abs_coeff()):
        raise NonzeroMeanError(f"{what} requires mean-zero data; "
                               f"mode 0 = {h.coeff(0)!r}")


# -- the four diagonal operators ------------------------------------------------

def interior_extension(h: CircleFourier, rho: float, r: float):
    """Harmonic extension into the disk of radius rho, traced on radius r.

    Returns (value, radial derivative) as Fourier data at radius r: mode n
    scales by (r/rho)^|n| and r d_r multiplies by an extra |n|.
    """
    if not (0.0 < r <= rho):
        raise InvalidParameterError(f"need 0 < r <= rho, got r={r} rho={rho}")
    absn = np.abs(h.modes)
    factor = (r / rho) ** absn
    value = CircleFourier(h.coeffs * factor, h.N)
    deriv = CircleFourier(h.coeffs * factor * absn, h.N)
    return value, deriv


def exterior_extension(g: CircleFourier, rho: float, r: float):
    """Bounded harmonic extension outside radius rho (decay r^{-1} at worst).

    Requires mean-zero data; returns (value, radial derivative) at radius
    r >= rho: mode n scales by (rho/r)^|n| and r d_r multiplies by -|n|.
    """
    if not (0.0 < rho <= r):
        raise InvalidParameterError(f"need r >= rho > 0, got r={r} rho={rho}")
    _require_mean_zero(g, "the exterior extension")
    absn = np.abs(g.modes)
    factor = (rho / r) ** absn
    value = CircleFourier(g.coeffs * factor, g.N)
    deriv = CircleFourier(-g.coeffs * factor * absn, g.N)
    return value, deriv


def halfcylinder_extension(h: CircleFourier, s: float) -> CircleFourier:
    """Decaying harmonic extension to the half cylinder, traced at height s.

    Requires modes 0 and +-1 to vanish, so the result decays at least like
    e^{-2 s} (the discrete analog of membership in the weight -2 class).
    """
    if s < 0.0:
        raise InvalidParameterError("s must be >= 0")
    tol = _MEAN_ZERO_ATOL * max(1.0, h.max_abs_coeff())
    for n in (0, 1, -1):
        if abs(h.coeff(n)) > tol:
            raise LowModePresentError(
                f"half-cylinder extension requires modes 0, +-1 to vanish; "
                f"mode {n} = {h.coeff(n)!r}"
            )
    factor = np.exp(-np.abs(h.modes) * s)
    return CircleFourier(h.coeffs * factor, h.N)


def dtn_matching(h: CircleFourier) -> CircleFourier:
    """Dirichlet-to-Neumann matching operator: mode n maps to 2|n| c_n.

    This is r d_r applied to the difference of the interior and exterior
    harmonic extensions on the common circle; it is diagonal, self-adjoint and
    positive definite on mean-zero data.
    """
    _require_mean_zero(h, "the matching operator")
    return CircleFourier(h.coeffs * (2.0 * np.abs(h.modes)), h.N)


def dtn_matching_inverse(h: CircleFourier) -> CircleFourier:
    """Inverse of :func:`dtn_matching` on mean-zero data (divide by 2|n|)."""
    _require_mean_zero(h, "the matching inverse")
    absn = np.abs(h.modes).astype(float)
    absn[h.N] = 1.0  # mode 0 is zero anyway
    return CircleFourier(h.coeffs / (2.0 * absn), h.N)
