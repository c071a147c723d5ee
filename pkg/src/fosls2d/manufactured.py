"""Exact solutions and data for the Helmholtz benchmark.

The radial benchmark solution on the centered unit square is

    u(r) = cos(k r)/k - C J0(k r),
    C = (cos k + i sin k) / (k (J0(k) + i J1(k))),

which solves -Laplace(u) - k^2 u = sin(k r)/r; the boundary datum g is
manufactured from the Robin condition du/dn - sigma i k u = g (sigma = -1
gives du/dn + i k u = g).  J0 and J1 are implemented here rather than
imported: an ascending series below x = 8 and an amplitude-phase form with
frozen Chebyshev-fitted modulus/phase corrections above.  The tests pin
both branches against independent high-precision references.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.chebyshev import chebval

__all__ = [
    "ExactSolution",
    "bessel_j0",
    "bessel_j1",
    "bessel_exact",
    "polynomial_exact",
]

_SERIES_SPLIT = 8.0
_TINY_RADIUS = 1e-8

# Chebyshev coefficients (argument 2u - 1, u = (8/x)^2) of the modulus and
# scaled phase functions of the large-argument expansions
#   J0(x) = sqrt(2/(pi x)) (P0 cos(x - pi/4)   - (8/x) Q0 sin(x - pi/4))
#   J1(x) = sqrt(2/(pi x)) (P1 cos(x - 3pi/4)  - (8/x) Q1 sin(x - 3pi/4)).
# Fitted against 50-digit reference values (tools/gen_bessel_tables.py);
# max deviation 1.3e-15 on [8, 600].
_CHEB_P0 = np.array([
    0.9994603493475195, -0.0005365220468131509, 3.075184787577173e-06,
    -5.170594531398977e-08, 1.6306465214356075e-09, -7.864085346464699e-11,
    5.168321485602574e-12, -4.3040054233129364e-13, 4.332313809655941e-14,
    -5.011844291416906e-15, 7.321018711646591e-16, -3.7026700107915997e-17,
    7.248857964982612e-17, 5.678565343729296e-17, 5.893131659834777e-17,
])
_CHEB_Q0 = np.array([
    -0.01555585460533702, 6.838519942611572e-05, -7.414498411068511e-07,
    1.7972457247158292e-08, -7.271915944640624e-10, 4.220121827368001e-11,
    -3.2067482256783637e-12, 3.006137036941237e-13, -3.3364009930627944e-14,
    4.254502129545507e-15, -6.107877615569559e-16, 9.58119465592804e-17,
    -1.739146039341311e-17, 2.351524267271296e-18, -1.4006955337099386e-18,
])
_CHEB_P1 = np.array([
    1.0009030408600137, 0.0008989898330859549, -3.987284300471362e-06,
    6.177633962538662e-08, -1.8718907346856593e-09, 8.816900803578642e-11,
    -5.704838227797741e-12, 4.69938008602217e-13, -4.682302179978961e-14,
    5.4718969207308285e-15, -6.981437244844111e-16, 1.1878293501251976e-16,
    -5.357749174729757e-18, 2.1525156570165973e-17, 1.4044025780805284e-17,
])
_CHEB_Q1 = np.array([
    0.046777787069535344, -9.627723549156918e-05, 9.138615257970471e-07,
    -2.0959781382493063e-08, 8.229193344254534e-10, -4.6863635343546944e-11,
    3.5152203183862776e-12, -3.264301202841572e-13, 3.596922352194296e-14,
    -4.559931981453385e-15, 6.523306662099143e-16, -1.0138023450198482e-16,
    1.8952555612878614e-17, -1.7946290229914872e-18, 1.8474787967953883e-18,
])


def _series_j0(x):
    # sum_m (-1)^m (x^2/4)^m / (m!)^2; converges to ~1e-17 within 40 terms
    # for x < 8
    z = -(x * x) / 4.0
    term = np.ones_like(x)
    total = np.ones_like(x)
    for m in range(1, 40):
        term = term * z / (m * m)
        total += term
    return total


def _series_j1(x):
    z = -(x * x) / 4.0
    term = np.ones_like(x)
    total = np.ones_like(x)
    for m in range(1, 40):
        term = term * z / (m * (m + 1))
        total += term
    return (x / 2.0) * total


def _asymptotic(x, cp, cq, cos_chi, sin_chi):
    u = (8.0 / x) ** 2
    w = 2.0 * u - 1.0
    p = chebval(w, cp)
    q = chebval(w, cq)
    return np.sqrt(2.0 / (np.pi * x)) * (p * cos_chi - (8.0 / x) * q * sin_chi)


def _bessel(x, which: int):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("Bessel argument must be nonnegative")
    out = np.empty_like(x)
    small = x < _SERIES_SPLIT
    if small.any():
        xs = x[small]
        out[small] = _series_j0(xs) if which == 0 else _series_j1(xs)
    large = ~small
    if large.any():
        xl = x[large]
        s, c = np.sin(xl), np.cos(xl)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        if which == 0:
            # chi = x - pi/4: cos -> (c+s)/sqrt2, sin -> (s-c)/sqrt2
            out[large] = _asymptotic(
                xl, _CHEB_P0, _CHEB_Q0, (c + s) * inv_sqrt2, (s - c) * inv_sqrt2
            )
        else:
            # chi = x - 3pi/4: cos -> (s-c)/sqrt2, sin -> -(s+c)/sqrt2
            out[large] = _asymptotic(
                xl, _CHEB_P1, _CHEB_Q1, (s - c) * inv_sqrt2, -(s + c) * inv_sqrt2
            )
    return out[0] if scalar else out


def bessel_j0(x):
    """Bessel function of the first kind, order 0, for x >= 0."""
    return _bessel(x, 0)


def bessel_j1(x):
    """Bessel function of the first kind, order 1, for x >= 0."""
    return _bessel(x, 1)


@dataclass(frozen=True)
class ExactSolution:
    """A manufactured Helmholtz solution with all derived data.

    All callables are numpy-vectorized over point arrays of shape
    (..., 2); ``g`` additionally takes the outward unit normals at the
    points.  ``phi = i k^{-1} grad u`` is the flux unknown of the first
    order system.
    """

    k: float
    sigma: int
    u: callable
    grad_u: callable
    phi: callable
    f: callable
    g: callable
    name: str = "exact"


def _radius(points):
    points = np.asarray(points, dtype=float)
    return np.sqrt(points[..., 0] ** 2 + points[..., 1] ** 2)


def bessel_exact(k: float, sigma: int = -1) -> ExactSolution:
    """The radial Bessel benchmark on the centered unit square."""
    if k <= 0:
        raise ValueError(f"wave number must be positive, got {k}")
    if sigma not in (-1, 1):
        raise ValueError(f"sigma must be +-1, got {sigma}")
    denom = bessel_j0(k) + 1j * bessel_j1(k)
    if abs(denom) < 1e-14:
        raise ValueError(f"J0(k) + i J1(k) vanishes at k={k}")  # cannot happen for real k
    C = (np.cos(k) + 1j * np.sin(k)) / (k * denom)

    def u(points):
        r = _radius(points)
        return np.cos(k * r) / k - C * bessel_j0(k * r)

    def du_dr(r):
        return -np.sin(k * r) + C * k * bessel_j1(k * r)

    def grad_u(points):
        points = np.asarray(points, dtype=float)
        r = _radius(points)
        safe = np.maximum(r, _TINY_RADIUS)
        # u'(r)/r -> -k^2 + C k^3 / 2 as r -> 0
        ratio = np.where(
            r < _TINY_RADIUS, -(k ** 2) + C * k ** 3 / 2.0, du_dr(safe) / safe
        )
        return ratio[..., None] * points

    def phi(points):
        return (1j / k) * grad_u(points)

    def f(points):
        r = _radius(points)
        safe = np.maximum(r, _TINY_RADIUS)
        return np.where(
            r < _TINY_RADIUS, k * (1.0 - (k * r) ** 2 / 6.0), np.sin(k * safe) / safe
        ).astype(complex)

    def g(points, normals):
        gu = grad_u(points)
        return np.einsum("...d,...d->...", gu, np.asarray(normals)) - sigma * 1j * k * u(
            points
        )

    return ExactSolution(k, sigma, u, grad_u, phi, f, g, name="bessel")


def polynomial_exact(k: float, sigma: int = 1) -> ExactSolution:
    """Linear in-space solution u = x + y; exactness oracle for the solver."""
    if k <= 0:
        raise ValueError(f"wave number must be positive, got {k}")
    if sigma not in (-1, 1):
        raise ValueError(f"sigma must be +-1, got {sigma}")

    def u(points):
        points = np.asarray(points, dtype=float)
        return (points[..., 0] + points[..., 1]).astype(complex)

    def grad_u(points):
        points = np.asarray(points, dtype=float)
        return np.broadcast_to(np.array([1.0 + 0j, 1.0 + 0j]), points.shape).copy()

    def phi(points):
        points = np.asarray(points, dtype=float)
        return np.broadcast_to(np.array([1j / k, 1j / k]), points.shape).copy()

    def f(points):
        return -(k ** 2) * u(points)

    def g(points, normals):
        normals = np.asarray(normals, dtype=float)
        return (
            normals[..., 0] + normals[..., 1] - sigma * 1j * k * u(points)
        )

    return ExactSolution(k, sigma, u, grad_u, phi, f, g, name="polynomial")
