"""Analytic objects of the limiting elliptic law.

The spectral law of the normalized elliptic ensemble with parameter rho is the
uniform measure mu_rho on the ellipse with half-axes (1+rho, 1-rho). This
module carries its Stieltjes-type transform m, the two fluctuation kernels of
the outlier/entry CLTs, and a Gauss-Legendre rule over the ellipse for the
quantities that genuinely are mu_rho integrals.

Kernels, with theta = 1/m(z) the inverse of z = theta + rho/theta:

* same-orientation:  phi_same(theta, theta') = 1/(theta theta' - rho)
  - 1/(theta theta'), which equals the mu_rho integral
  -(m(z)-m(z'))/(z-z') - m(z)m(z').
* mixed-conjugate:   phi(z, z') = v^2/(1-v) with v = m(z) conj(m(z')).
  This is the limit of N Cov(R_ij(z), R_ij(z')) for off-diagonal resolvent
  entries; it is NOT the uniform-ellipse integral of the resolvent product
  (non-normal matrices: *-moments are not ESD integrals). At rho=0 it reduces
  to 1/(z conj(z') (z conj(z') - 1)) and at rho=1 to the semicircular kernel.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    pass


class AccuracyWarning(UserWarning):
    """Quadrature value moved by more than the refinement tolerance on node doubling."""


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


@dataclass(frozen=True)
class EllipticLaw:
    rho: float

    def __post_init__(self):
        if abs(self.rho) > 1:
            raise DomainError(f"|rho| <= 1 required, got {self.rho}")

    @property
    def half_axes(self) -> tuple[float, float]:
        return (1.0 + self.rho, 1.0 - self.rho)

    def contains(self, w: complex, margin: float = 0.0) -> bool:
        a, b = self.half_axes
        a, b = a + margin, b + margin
        x = (w.real / a) ** 2 if a > 0 else (math.inf if w.real != 0 else 0.0)
        y = (w.imag / b) ** 2 if b > 0 else (math.inf if w.imag != 0 else 0.0)
        return x + y <= 1.0

    def boundary(self, t: np.ndarray) -> np.ndarray:
        a, b = self.half_axes
        return a * np.cos(t) + 1j * b * np.sin(t)


def _check_outside(z: complex, rho: float, margin: float = 0.0) -> None:
    if abs(z) <= 1.0 + abs(rho) + margin:
        raise DomainError(
            f"z={z} inside the guard disk of radius {1.0 + abs(rho) + margin:g}"
        )


def m(z: complex, rho: float) -> complex:
    """Stieltjes-type transform of mu_rho for |z| > 1 + |rho|.

    Solves theta^2 - z theta + rho = 0 and keeps the root with |theta| > 1;
    m(z) = 1/theta, the inverse of z = theta + rho/theta.
    """
    _check_outside(z, rho)
    z = complex(z)
    disc = np.sqrt(complex(z * z - 4.0 * rho))
    theta1 = 0.5 * (z + disc)
    theta2 = 0.5 * (z - disc)
    theta = theta1 if abs(theta1) >= abs(theta2) else theta2
    return 1.0 / theta


def theta_of(z: complex, rho: float) -> complex:
    """The |theta| > 1 solution of z = theta + rho/theta."""
    return 1.0 / m(z, rho)


def m_series(z: complex, rho: float, terms: int = 60) -> complex:
    """Catalan series sum_k rho^k Cat(k) z^(-2k-1); valid for |z| > 2 sqrt(|rho|)."""
    if abs(z) <= 2.0 * math.sqrt(abs(rho)):
        raise DomainError(f"series needs |z| > 2 sqrt|rho|, got |z|={abs(z):g}")
    z = complex(z)
    total = 0.0 + 0j
    zpow = 1.0 / z
    for k in range(terms):
        total += (rho ** k) * catalan(k) * zpow
        zpow /= z * z
    return total


def phi_same(theta: complex, theta_prime: complex, rho: float) -> complex:
    """Same-orientation covariance kernel 1/(theta theta' - rho) - 1/(theta theta')."""
    prod = complex(theta) * complex(theta_prime)
    if abs(theta) <= 1.0 or abs(theta_prime) <= 1.0:
        raise DomainError("phi_same needs |theta|, |theta'| > 1")
    if prod == rho:  # unreachable when |theta theta'| > 1 >= |rho|; guarded anyway
        raise DomainError("pole theta*theta' == rho")
    return 1.0 / (prod - rho) - 1.0 / prod


def phi(z: complex, z_prime: complex, rho: float, margin: float = 0.05) -> complex:
    """Mixed-conjugate covariance kernel of resolvent-entry fluctuations.

    phi(z, z') = v^2/(1-v), v = m(z) conj(m(z')); conjugate-symmetric and
    positive on the diagonal.
    """
    _check_outside(z, rho, margin=margin - 1e-15)
    _check_outside(z_prime, rho, margin=margin - 1e-15)
    v = m(z, rho) * np.conj(m(z_prime, rho))
    return complex(v * v / (1.0 - v))


@dataclass(frozen=True)
class QuadratureSpec:
    nodes_r: int = 64
    nodes_phi: int = 128
    refine_check: bool = True
    refine_tol: float = 1e-7


def _disk_rule(rho: float, nodes_r: int, nodes_phi: int):
    # Gauss-Legendre in (s, phi) with s = r^2, so the disk Jacobian is constant
    # and nodes do not cluster at r = 0; (x, y) -> ((1+rho)x, (1-rho)y) pushes
    # the uniform disk onto the uniform ellipse.
    s_nodes, s_weights = np.polynomial.legendre.leggauss(nodes_r)
    p_nodes, p_weights = np.polynomial.legendre.leggauss(nodes_phi)
    s = 0.5 * (s_nodes + 1.0)
    phi_ = np.pi * (p_nodes + 1.0)
    ws = 0.5 * s_weights
    wp = np.pi * p_weights / (2.0 * np.pi)
    r = np.sqrt(s)
    w = (1.0 + rho) * np.outer(r, np.cos(phi_)) + 1j * (1.0 - rho) * np.outer(r, np.sin(phi_))
    weights = np.outer(ws, wp)
    return w.ravel(), weights.ravel()


def ellipse_integrate(f, rho: float, quad: QuadratureSpec | None = None) -> complex:
    """Integral of f against the uniform measure on the ellipse.

    Tensor Gauss-Legendre over the unit disk in (r^2, phi) mapped onto the
    ellipse. With refine_check the node counts are doubled once and an
    AccuracyWarning is emitted if the value moves by more than refine_tol;
    the refined value is returned.
    """
    quad = quad or QuadratureSpec()
    w, weights = _disk_rule(rho, quad.nodes_r, quad.nodes_phi)
    coarse = complex(np.sum(weights * f(w)))
    if not quad.refine_check:
        return coarse
    w2, weights2 = _disk_rule(rho, 2 * quad.nodes_r, 2 * quad.nodes_phi)
    fine = complex(np.sum(weights2 * f(w2)))
    if abs(fine - coarse) > quad.refine_tol:
        warnings.warn(
            f"quadrature moved by {abs(fine - coarse):.3e} on node doubling",
            AccuracyWarning,
            stacklevel=2,
        )
    return fine


def m_quadrature(z: complex, rho: float, quad: QuadratureSpec | None = None) -> complex:
    """m(z) by ellipse quadrature; cross-validates the closed form."""
    _check_outside(z, rho, margin=0.05 - 1e-15)
    return ellipse_integrate(lambda w: 1.0 / (z - w), rho, quad)


def resolvent_pair_integral(
    z: complex, z_prime: complex, rho: float, quad: QuadratureSpec | None = None
) -> complex:
    """The genuine mu_rho integral of 1/((z-w)(z'-w)) (same orientation).

    By partial fractions it equals -(m(z)-m(z'))/(z-z'); subtracting
    m(z)m(z') gives phi_same(theta(z), theta(z'), rho).
    """
    _check_outside(z, rho, margin=0.05 - 1e-15)
    _check_outside(z_prime, rho, margin=0.05 - 1e-15)
    return ellipse_integrate(lambda w: 1.0 / ((z - w) * (z_prime - w)), rho, quad)
