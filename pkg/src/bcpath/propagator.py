"""Euclidean heat kernels K_T(x, y) = exp(-T H)(x, y).

Three independent routes are provided: image sums for the cases where the
method of images applies, Bromwich-type inversion of any resolvent, and the
eigensum (see :mod:`bcpath.spectral`). ``forward_laplace_check`` goes the other
way, from a kernel back to the resolvent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .bc import (BoundaryUnitary, Dirichlet, Domain, NamedBC, Neumann, Periodic,
                 PseudoPeriodic, to_unitary)
from .errors import ContourFailure, DivergentIntegral, InsufficientSpectrum, NoImageForm
from .resolvent import BoundStateReport, ResolventEval
from .spectral import Spectrum, spectral_heat_kernel

IMAGE_TOL = 1e-16


@dataclass(frozen=True, eq=False)
class HeatKernelEval:
    domain: Domain
    bc: BoundaryUnitary
    rule: Callable  # (x, y, T) -> complex, scalar arguments
    method: str = ""

    def __call__(self, x, y, T):
        x, y, T = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, T)))
        if x.ndim == 0:
            return complex(self.rule(float(x), float(y), float(T)))
        out = np.empty(x.shape, dtype=complex)
        for idx in np.ndindex(x.shape):
            out[idx] = self.rule(float(x[idx]), float(y[idx]), float(T[idx]))
        return out


def free_kernel(d, T):
    return np.exp(-np.asarray(d) ** 2 / (2.0 * T)) / math.sqrt(2.0 * math.pi * T)


# --------------------------------------------------------------------------
# image sums

def _lattice_sum(a, period, T, tol, phase=None):
    """sum_n w_n G(a + period*n) with G the free kernel, truncated relatively.

    Terms are added in shells around the Gaussian peak; the sum stops once both
    new terms fall below tol times the accumulated sum of |terms|.
    """
    n0 = int(round(-a / period))
    norm = 1.0 / math.sqrt(2.0 * math.pi * T)

    def term(n):
        d = a + period * n
        g = norm * math.exp(-d * d / (2.0 * T))
        return g if phase is None else g * phase(n)

    t0 = term(n0)
    total, mag = t0, abs(t0)
    k = 1
    while True:
        tp, tm = term(n0 + k), term(n0 - k)
        total += tp + tm
        mag += abs(tp) + abs(tm)
        if max(abs(tp), abs(tm)) <= tol * mag or (mag == 0.0 and k > 50):
            return total
        k += 1


def image_sum_kernel(bc: NamedBC, domain: Domain | None, T: float, x: float, y: float,
                     tol: float = IMAGE_TOL) -> complex:
    if T <= 0:
        raise ValueError("T must be positive")
    if not isinstance(bc, (Neumann, Dirichlet, Periodic, PseudoPeriodic)):
        raise NoImageForm(f"{bc.text()} has no image-sum kernel; "
                          "use the spectral or inverse-laplace route")
    domain = to_unitary(bc, domain).domain
    if isinstance(bc, (Neumann, Dirichlet)):
        sign = 1.0 if isinstance(bc, Neumann) else -1.0
        if domain is Domain.HALF_LINE:
            return complex(free_kernel(x - y, T) + sign * free_kernel(x + y, T))
        # reflections in 0 and 1 generate shifts by 2
        direct = _lattice_sum(x - y, 2.0, T, tol)
        mirrored = _lattice_sum(x + y, 2.0, T, tol)
        return complex(direct + sign * mirrored)
    eps = bc.eps if isinstance(bc, PseudoPeriodic) else 0.0
    if eps == 0.0:
        return complex(_lattice_sum(x - y, 1.0, T, tol))
    # a path ending at y + m (m net left-to-right crossings) carries exp(i eps m)
    return complex(_lattice_sum(x - y, 1.0, T, tol, phase=lambda n: np.exp(-1j * eps * n)))


def image_kernel(bc: NamedBC, domain: Domain | None = None, tol: float = IMAGE_TOL):
    U = to_unitary(bc, domain)
    image_sum_kernel(bc, U.domain, 1.0, 0.0, 0.0, tol)  # validates bc early
    return HeatKernelEval(U.domain, U, lambda x, y, T: image_sum_kernel(bc, U.domain, T, x, y, tol),
                          "images")


def spectral_kernel(spec: Spectrum, tail_tol: float = 1e-12):
    return HeatKernelEval(Domain.INTERVAL, spec.bc,
                          lambda x, y, T: spectral_heat_kernel(spec, T, x, y, tail_tol), "spectral")


# --------------------------------------------------------------------------
# resolvent -> kernel

def _parabola(n, T):
    # z = mu (1 + iu)^2 opening to the left, trapezoid in u with 2n+1 nodes;
    # step and width follow Weideman & Trefethen (2007)
    h = 3.0 / n
    mu = math.pi * n / (12.0 * T)
    u = h * np.arange(-n, n + 1)
    return mu * (1.0 + 1j * u) ** 2, 2j * mu * (1.0 + 1j * u), h


def _bromwich(resolvent, T, x, y, sigma, n):
    z, dz, h = _parabola(n, T)
    z = z + sigma
    vals = np.array([resolvent.rule(x, y, zk) for zk in z])
    # (z + H)^{-1} = 2 C_z
    return complex(h / (2j * math.pi) * np.sum(np.exp(z * T) * 2.0 * vals * dz))


def inverse_laplace_kernel(resolvent: ResolventEval, T: float, x: float, y: float,
                           bound_states: BoundStateReport | None = None,
                           n_nodes: int = 16, err_tol: float = 1e-5) -> complex:
    """K_T(x, y) from the resolvent by contour integration.

    The contour is shifted to the right of every pole in ``bound_states`` (and of
    z = 0), then deformed into a parabola wrapping the negative real axis. The
    result on 4n+1 nodes is returned; the 2n+1 node result serves as the error
    estimate.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    poles = bound_states.poles if bound_states is not None else ()
    sigma = max((0.0,) + tuple(poles)) + 1.0
    coarse = _bromwich(resolvent, T, x, y, sigma, n_nodes)
    fine = _bromwich(resolvent, T, x, y, sigma, 2 * n_nodes)
    err = abs(fine - coarse)
    # absolute floor for kernels that vanish (Dirichlet boundary points)
    floor = 1e-6 / math.sqrt(2.0 * math.pi * T)
    if err > err_tol * max(abs(fine), floor):
        raise ContourFailure(f"contour estimate unstable at T={T}: |K_n - K_2n| = {err:.2e}")
    return fine


def inverse_laplace_kernel_eval(family: ResolventEval, bound_states=None, n_nodes: int = 16):
    return HeatKernelEval(family.domain, family.bc,
                          lambda x, y, T: inverse_laplace_kernel(family, T, x, y, bound_states,
                                                                 n_nodes),
                          "inverse-laplace")


# --------------------------------------------------------------------------
# kernel -> resolvent

_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def forward_laplace_check(kernel: HeatKernelEval, z, x: float, y: float,
                          chunk: float = 1.0, t_limit: float = 1e4) -> complex:
    """1/2 * integral_0^inf exp(-z T) K_T(x, y) dT, comparable with a ResolventEval.

    (0, 1] is integrated adaptively after T = u^2, which removes the T^{-1/2}
    behaviour of the kernel; the tail is integrated with Gauss-Legendre panels
    until the integrand is negligible.
    """
    z = complex(z)

    def head(u, part):
        T = u * u
        if T == 0.0:
            return 0.0
        v = 2.0 * u * np.exp(-z * T) * kernel(x, y, T)
        return v.real if part == 0 else v.imag

    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=200)
    total = complex(quad(head, 0.0, 1.0, args=(0,), **opts)[0],
                    quad(head, 0.0, 1.0, args=(1,), **opts)[0])

    a = 1.0
    width = chunk if z.imag == 0 else min(chunk, math.pi / abs(z.imag))
    while True:
        b = a + width
        T = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
        with np.errstate(over="ignore", invalid="ignore"):
            f = np.exp(-z * T) * kernel(x, y, T)
        if not np.all(np.isfinite(f)):
            raise DivergentIntegral(f"Laplace integrand overflows at T={b:.1f} for z={z}")
        piece = 0.5 * (b - a) * np.dot(_GL_W, f)
        total += piece
        if abs(f[-1]) * max(1.0, b) <= 1e-16 * max(abs(total), 1e-300) and abs(piece) <= \
                1e-16 * max(abs(total), 1e-300):
            break
        a = b
        if a > t_limit:
            raise DivergentIntegral(f"Laplace integral at z={z} not converged by T={t_limit}")
        width = min(width * 1.25, 8.0 if z.imag == 0 else math.pi / abs(z.imag))
    return 0.5 * total


# --------------------------------------------------------------------------
# wave packets

@dataclass(frozen=True, eq=False)
class WavePacket:
    x: np.ndarray
    values: np.ndarray
    domain: Domain = Domain.INTERVAL

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))
        if self.x.shape != self.values.shape or self.x.ndim != 1:
            raise ValueError("grid and values must be 1-D arrays of equal length")

    @property
    def size(self) -> int:
        return self.x.size

    def inner(self, other_values) -> complex:
        return complex(np.trapezoid(np.conj(other_values) * self.values, self.x))

    def norm(self) -> float:
        return math.sqrt(np.trapezoid(np.abs(self.values) ** 2, self.x))


def gaussian_packet(center: float, width: float, n: int = 513, momentum: float = 0.0):
    x = np.linspace(0.0, 1.0, n)
    v = np.exp(-(x - center) ** 2 / (2.0 * width ** 2) + 1j * momentum * x)
    p = WavePacket(x, v)
    return WavePacket(x, v / p.norm())


def evolve_packet(psi: WavePacket, spec: Spectrum, T: float, tol: float = 1e-12) -> WavePacket:
    """psi_T = sum_n exp(-lambda_n T) <psi_n, psi> psi_n on the packet grid."""
    if T < 0:
        raise ValueError("T must be non-negative")
    if T > 0 and math.exp(-spec.lambda_max * T) >= tol:
        raise InsufficientSpectrum(f"exp(-lambda_max T) = {math.exp(-spec.lambda_max * T):.2e}"
                                   f" >= {tol:.1e}; request more modes")
    lam, modes = spec.modes(psi.x)
    coeffs = np.trapezoid(modes.conj() * psi.values[:, None], psi.x, axis=0)
    out = modes @ (np.exp(-lam * T) * coeffs)
    return WavePacket(psi.x, out, psi.domain)
