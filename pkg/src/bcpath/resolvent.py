"""Resolvent kernels: Neumann background, Krein construction, closed forms.

Normalization: every kernel returned here is the Green's function of
``2z - d^2/dx^2`` under the chosen boundary condition, so its first
derivative jumps by -1 across x = y. The resolvent of H = -1/2 d^2/dx^2
itself is twice this, ``(z + H)^{-1} = 2 C_z``, and the heat kernel is related by

    C_z(x, y) = 1/2 * integral_0^inf exp(-z T) K_T(x, y) dT.

With this normalization the boundary correction takes the compact form
``R = ((I - U) C0 - i (I + U))^{-1} (I - U)``, C0 being the boundary-to-boundary
block of the Neumann kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .bc import (BoundaryUnitary, Custom, DeltaPoint, Dirichlet, Domain, NamedBC, Neumann,
                 Periodic, PseudoPeriodic, QuasiPeriodic, Robin, as_unitary, to_unitary)
from .errors import NoClosedForm, PoleProximity, SingularKreinMatrix

POLE_TOL = 1e-10
KREIN_COND_MAX = 1e12


def sqrt2z(z):
    """Principal branch of sqrt(2z); Re >= 0 so exp(-sqrt(2z)|x|) decays."""
    return np.sqrt(2.0 * np.asarray(z, dtype=complex))


@dataclass(frozen=True, eq=False)
class ResolventEval:
    """Kernel C_z(x, y) at a fixed spectral parameter.

    ``rule(x, y, z)`` is kept so the same kernel can be re-evaluated along a
    contour (see :meth:`at`).
    """

    domain: Domain
    bc: BoundaryUnitary
    z: complex
    rule: Callable
    method: str = ""

    def __call__(self, x, y):
        return self.rule(np.asarray(x, dtype=float), np.asarray(y, dtype=float), self.z)

    def at(self, z) -> "ResolventEval":
        return replace(self, z=complex(z))

    @property
    def s(self) -> complex:
        return complex(sqrt2z(self.z))


@dataclass(frozen=True)
class BoundStateReport:
    poles: tuple[float, ...] = ()

    @property
    def kappas(self) -> tuple[float, ...]:
        return tuple(math.sqrt(2.0 * p) for p in self.poles)

    @property
    def energies(self) -> tuple[float, ...]:
        return tuple(-p for p in self.poles)

    def __len__(self):
        return len(self.poles)


# --------------------------------------------------------------------------
# pole bookkeeping

def _near_negative_axis(z) -> bool:
    return (z.real <= POLE_TOL and abs(z.imag) <= POLE_TOL) or abs(z) <= POLE_TOL


def _near_lattice(z, values) -> bool:
    return any(abs(z - v) <= POLE_TOL for v in values)


def _interval_levels(z, step, shift=0.0):
    """Points -(step*n + shift)^2/2 nearest to z (n integer)."""
    if z.real > POLE_TOL:
        return ()
    k = math.sqrt(2.0 * max(-z.real, 0.0))
    n0 = (k - shift) / step
    return [-(step * n + shift) ** 2 / 2.0 for n in range(int(n0) - 2, int(n0) + 3)]


def _check(z, domain, extra_levels=()):
    if domain is Domain.HALF_LINE:
        if _near_negative_axis(z):
            raise PoleProximity(f"z={z} lies on the continuous spectrum (-inf, 0]")
    elif _near_lattice(z, extra_levels):
        raise PoleProximity(f"z={z} is within {POLE_TOL} of an eigenvalue pole")


# --------------------------------------------------------------------------
# Neumann background

def _neumann_halfline(x, y, z):
    s = sqrt2z(z)
    return (np.exp(-s * np.abs(x - y)) + np.exp(-s * (np.abs(x) + np.abs(y)))) / (2.0 * s)


def _neumann_interval(x, y, z):
    s = sqrt2z(z)
    d = np.abs(x - y)
    q = -np.expm1(-2.0 * s)
    num = (np.exp(-s * (x + y)) + np.exp(-s * (2.0 - x - y))
           + np.exp(-s * d) + np.exp(-s * (2.0 - d)))
    return num / (2.0 * s * q)


def _neumann_rule(domain):
    return _neumann_halfline if domain is Domain.HALF_LINE else _neumann_interval


def background_resolvent(domain: Domain, z) -> ResolventEval:
    z = complex(z)
    _check(z, domain, _interval_levels(z, math.pi))
    return ResolventEval(domain, to_unitary(Neumann(), domain), z, _neumann_rule(domain),
                         "background")


# --------------------------------------------------------------------------
# Krein formula

def krein_matrix(U: BoundaryUnitary, z) -> np.ndarray:
    """((I - U) C0 - i (I + U)) with C0 the Neumann boundary block at z."""
    w = np.array(U.domain.boundary_points)
    c0 = _neumann_rule(U.domain)(w[:, None], w[None, :], complex(z))
    eye = np.eye(U.size)
    return (eye - U.matrix) @ c0 - 1j * (eye + U.matrix)


def krein_correction(U: BoundaryUnitary, z) -> np.ndarray:
    """R_z = ((I - U) C0 - i (I + U))^{-1} (I - U)."""
    K = krein_matrix(U, z)
    # cond() is 1 for any nonzero 1x1 matrix, so measure the smallest singular
    # value against the size of the two terms that cancel at a pole
    w = np.array(U.domain.boundary_points)
    c0 = _neumann_rule(U.domain)(w[:, None], w[None, :], complex(z))
    eye = np.eye(U.size)
    scale = (np.linalg.norm(eye - U.matrix, 2) * np.linalg.norm(c0, 2)
             + np.linalg.norm(eye + U.matrix, 2))
    smin = np.linalg.svd(K, compute_uv=False)[-1]
    if smin * KREIN_COND_MAX <= scale:
        raise SingularKreinMatrix(f"Krein matrix singular at z={complex(z)}: "
                                  "z is an eigenvalue pole of this extension")
    return np.linalg.solve(K, np.eye(U.size) - U.matrix)


def _krein_rule(U: BoundaryUnitary):
    c0 = _neumann_rule(U.domain)
    w = np.array(U.domain.boundary_points)

    def rule(x, y, z):
        R = krein_correction(U, z)
        cx = c0(np.asarray(x)[..., None], w, z)
        cy = c0(w, np.asarray(y)[..., None], z)
        return c0(x, y, z) - np.einsum("...i,ij,...j->...", cx, R, cy)

    return rule


def krein_resolvent(U, z, domain: Domain | None = None) -> ResolventEval:
    U = as_unitary(U, domain)
    z = complex(z)
    if U.domain is Domain.HALF_LINE:
        _check(z, U.domain)
    else:
        _check(z, U.domain, _interval_levels(z, math.pi))
    krein_correction(U, z)  # fail early on a singular point
    return ResolventEval(U.domain, U, z, _krein_rule(U), "krein")


# --------------------------------------------------------------------------
# closed forms

def _robin_rule(alpha):
    a = math.remainder(alpha, 2.0 * math.pi)
    near_pi = abs(abs(a) - math.pi) < 0.1
    t = math.tan(a / 2.0)
    c = 1.0 / math.tan(a / 2.0) if a != 0.0 else math.inf

    def rule(x, y, z):
        s = sqrt2z(z)
        if near_pi:
            coef = (s * c - 1.0) / (2.0 * s * (s * c + 1.0))
        else:
            coef = (s - t) / (2.0 * s * (s + t))
        return (np.exp(-s * np.abs(x - y)) / (2.0 * s)
                + coef * np.exp(-s * (np.abs(x) + np.abs(y))))

    return rule, t


def _dirichlet_halfline(x, y, z):
    s = sqrt2z(z)
    return (np.exp(-s * np.abs(x - y)) - np.exp(-s * (np.abs(x) + np.abs(y)))) / (2.0 * s)


def _dirichlet_interval(x, y, z):
    s = sqrt2z(z)
    d = np.abs(x - y)
    q = -np.expm1(-2.0 * s)
    num = (np.exp(-s * d) + np.exp(-s * (2.0 - d))
           - np.exp(-s * (x + y)) - np.exp(-s * (2.0 - x - y)))
    return num / (2.0 * s * q)


def _pseudo_rule(eps):
    ph = np.exp(1j * eps)

    def rule(x, y, z):
        s = sqrt2z(z)
        d = x - y
        e = np.exp(-s)
        return (np.exp(-s * np.abs(d))
                + np.exp(-s * (1.0 + d)) / (ph - e)
                + np.exp(-s * (1.0 - d)) / (1.0 / ph - e)) / (2.0 * s)

    return rule


def closed_form_resolvent(bc: NamedBC, z, domain: Domain | None = None) -> ResolventEval:
    """Resolvent from the explicit image-resummed formulas.

    Available for Neumann and Dirichlet on either domain, Robin on the half-line,
    and periodic / pseudo-periodic on the interval.
    """
    if isinstance(bc, (QuasiPeriodic, DeltaPoint, Custom)):
        raise NoClosedForm(f"{bc.text()} has no closed-form resolvent; "
                           "use krein_resolvent or the spectral route")
    U = to_unitary(bc, domain)
    domain, z = U.domain, complex(z)
    if isinstance(bc, Neumann):
        _check(z, domain, _interval_levels(z, math.pi))
        rule = _neumann_rule(domain)
    elif isinstance(bc, Dirichlet):
        _check(z, domain, _interval_levels(z, math.pi, math.pi))
        rule = _dirichlet_halfline if domain is Domain.HALF_LINE else _dirichlet_interval
    elif isinstance(bc, Robin):
        _check(z, domain)
        rule, t = _robin_rule(bc.alpha)
        if t < 0 and abs(complex(sqrt2z(z)) + t) <= POLE_TOL:
            raise PoleProximity(f"z={z} is the Robin bound-state pole")
    elif isinstance(bc, Periodic):
        _check(z, domain, _interval_levels(z, 2 * math.pi))
        rule = _pseudo_rule(0.0)
    elif isinstance(bc, PseudoPeriodic):
        eps = math.remainder(bc.eps, 2 * math.pi)
        _check(z, domain, _interval_levels(z, 2 * math.pi, abs(eps))
               + _interval_levels(z, 2 * math.pi, 2 * math.pi - abs(eps)))
        rule = _pseudo_rule(bc.eps)
    else:  # pragma: no cover - exhaustive over the catalogue
        raise NoClosedForm(repr(bc))
    return ResolventEval(domain, U, z, rule, "closed")


# --------------------------------------------------------------------------
# bound states

def _abs_det(U, kappa):
    return abs(np.linalg.det(krein_matrix(U, kappa * kappa / 2.0)))


def _polish(U, k):
    """Secant steps on the (analytic) Krein determinant, keeping kappa real."""
    f = lambda kk: np.linalg.det(krein_matrix(U, kk * kk / 2.0))
    h = 1e-7 * max(1.0, k)
    best, fbest = k, abs(f(k))
    for _ in range(6):
        d = (f(k + h) - f(k - h)) / (2 * h)
        if d == 0:
            break
        k = (k - f(k) / d).real
        fk = abs(f(k))
        if fk < fbest:
            best, fbest = k, fk
        else:
            break
    return best, fbest


def find_bound_states(bc, domain: Domain | None = None, search_max: float = 50.0,
                      det_tol: float = 1e-10) -> BoundStateReport:
    """Poles of the resolvent at z = kappa^2/2 > 0, kappa in (0, search_max]."""
    U = as_unitary(bc, domain)
    n = max(int(10 * search_max), 50)
    ks = np.linspace(search_max / n, search_max, n)
    vals = np.array([_abs_det(U, k) for k in ks])
    found = []
    for i in range(1, n - 1):
        if vals[i] <= vals[i - 1] and vals[i] < vals[i + 1]:
            res = minimize_scalar(lambda k: _abs_det(U, k), bounds=(ks[i - 1], ks[i + 1]),
                                  method="bounded", options={"xatol": 1e-14, "maxiter": 500})
            k, fk = _polish(U, float(res.x))
            if fk < det_tol:
                found.append(k)
    kept = []
    for k in sorted(found):
        if not kept or k - kept[-1] > 1e-8 * max(1.0, k):
            kept.append(k)
    return BoundStateReport(tuple(float(k * k / 2.0) for k in kept))
