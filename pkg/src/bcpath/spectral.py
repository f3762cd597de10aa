"""Eigenvalue problem of H = -1/2 d^2/dx^2 on [0, 1] for an arbitrary U(2) condition.

Solutions at energy E are written in the basis {c_q, s_q}, with q the signed
wave number (E = q^2/2 for q >= 0, E = -q^2/2 for q < 0):

    q > 0:  c = cos(q x),   s = sin(q x)/q
    q = 0:  c = 1,          s = x
    -1 <= q < 0:  c = cosh(k x),  s = sinh(k x)/k,   k = -q
    q < -1:       c = exp(-k x),  s = exp(-k (1 - x))

Near E = 0 the basis is entire in E, so the secular matrix is continuous there
and a single scan over q covers bound states and the positive spectrum. Deep
below zero cosh and sinh become numerically collinear, hence the switch to
exponentials decaying away from each end.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .bc import BoundaryUnitary, Domain, as_unitary
from .errors import IncompatibleDomain, InsufficientSpectrum, RootFindingFailure

ROOT_TOL = 1e-10
MULT_TOL = 1e-8
QUAD_PANELS = 2048
JSON_GRID = 257


def _basis(q, x, derivative=False):
    """c_q(x), s_q(x) (or their x-derivatives); q scalar, x array."""
    x = np.asarray(x, dtype=float)
    if q > 0:
        if derivative:
            return -q * np.sin(q * x), np.cos(q * x)
        return np.cos(q * x), x * np.sinc(q * x / math.pi)
    if q < -1:
        k = -q
        a, b = np.exp(-k * x), np.exp(-k * (1.0 - x))
        if derivative:
            return -k * a, k * b
        return a, b
    if q < 0:
        k = -q
        if derivative:
            return k * np.sinh(k * x), np.cosh(k * x)
        return np.cosh(k * x), np.sinh(k * x) / k
    if derivative:
        return np.zeros_like(x), np.ones_like(x)
    return np.ones_like(x), x.copy()


def _boundary_values(q):
    """Basis values and x-derivatives at x = 0 and x = 1 for an array of q."""
    q = np.asarray(q, dtype=float)
    k = np.abs(q)
    one, zero = np.ones_like(q), np.zeros_like(q)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        trig = (one, np.cos(k), -k * np.sin(k), zero, np.sinc(k / math.pi), one, np.cos(k))
        hyp = (one, np.cosh(k), k * np.sinh(k),
               zero, np.sinh(k) / np.where(k > 0, k, 1.0), one, np.cosh(k))
        ek = np.exp(-k)
        expo = (one, ek, -k * ek, ek, one, k * ek, k * one)
    # (c0, c1, c0', c1', s0, s1, s0', s1')
    out = []
    for j in range(7):
        v = np.where(q >= 0, trig[j], np.where(q >= -1, hyp[j], expo[j]))
        out.append(v)
    c0, c1, dc1, s0, s1, ds0, ds1 = out
    dc0 = np.where(q < -1, -k, zero)
    return c0, c1, dc0, dc1, s0, s1, ds0, ds1


def _secular_batch(U: np.ndarray, q: np.ndarray) -> np.ndarray:
    c0, c1, dc0, dc1, s0, s1, ds0, ds1 = _boundary_values(np.atleast_1d(q))
    n = c0.size
    phi = np.empty((n, 2, 2))
    phi[:, 0, 0], phi[:, 1, 0], phi[:, 0, 1], phi[:, 1, 1] = c0, c1, s0, s1
    # outward normal derivative: -d/dx at 0, +d/dx at 1
    dphi = np.empty((n, 2, 2))
    dphi[:, 0, 0], dphi[:, 1, 0], dphi[:, 0, 1], dphi[:, 1, 1] = -dc0, dc1, -ds0, ds1
    eye = np.eye(2)
    return (eye - U) @ phi - 1j * (eye + U) @ dphi


def _scale(q):
    q = np.asarray(q, dtype=float)
    k = np.abs(q)
    return (1.0 + k) * np.where((q < 0) & (q >= -1), np.cosh(k), 1.0)


def _energy_to_q(E):
    return math.copysign(math.sqrt(2.0 * abs(E)), E)


def secular_matrix(U: BoundaryUnitary, E: float) -> np.ndarray:
    """M(E) acting on (A, B) of psi = A c + B s; singular iff E is an eigenvalue."""
    if U.domain is not Domain.INTERVAL:
        raise IncompatibleDomain("the secular matrix is defined on the interval only")
    return _secular_batch(U.matrix, np.array([_energy_to_q(E)]))[0]


def _gap(U, q):
    """Normalized smallest singular value at q (vectorized)."""
    q = np.atleast_1d(q)
    sv = np.linalg.svd(_secular_batch(U, q), compute_uv=False)
    return sv[:, -1] / _scale(q)


def _realdet(U, q):
    """det M / sqrt(det U), real for real q; scaled to O(1).

    Writing U = exp(iA), M = U^(1/2) (-2i)(sin(A/2) Phi + cos(A/2) Phidot) and
    the bracket has a real determinant, so roots show up as sign changes and
    close pairs as extrema that dip through zero.
    """
    q = np.atleast_1d(q)
    d = np.linalg.det(_secular_batch(U, q)) / np.sqrt(np.linalg.det(U))
    return d.real / _scale(q) ** 2


def _absdet(U, q):
    return np.abs(_realdet(U, q))


@dataclass(frozen=True, eq=False)
class EigenPair:
    eigenvalue: float
    multiplicity: int
    q: float
    coeffs: np.ndarray  # (2, multiplicity), columns orthonormal in L2[0,1]

    def evaluate(self, x, derivative=False) -> np.ndarray:
        """Values at x, shape x.shape + (multiplicity,)."""
        c, s = _basis(self.q, x, derivative)
        return c[..., None] * self.coeffs[0] + s[..., None] * self.coeffs[1]

    @property
    def eigenfunctions(self):
        return [(lambda x, j=j: self.evaluate(x)[..., j]) for j in range(self.multiplicity)]


@dataclass(frozen=True, eq=False)
class Spectrum:
    pairs: tuple[EigenPair, ...]
    n_requested: int
    bc: BoundaryUnitary | None = None

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity."""
        return np.repeat([p.eigenvalue for p in self.pairs], [p.multiplicity for p in self.pairs])

    @property
    def lambda_max(self) -> float:
        return self.pairs[-1].eigenvalue

    def modes(self, x):
        """(eigenvalues, values) with values of shape x.shape + (n_modes,)."""
        vals = np.concatenate([p.evaluate(x) for p in self.pairs], axis=-1)
        return self.eigenvalues, vals

    def to_json(self) -> str:
        grid = np.linspace(0.0, 1.0, JSON_GRID)
        out = []
        for p in self.pairs:
            v = p.evaluate(grid)
            out.append({
                "eigenvalue": p.eigenvalue,
                "multiplicity": p.multiplicity,
                "q": p.q,
                "coefficients": [[[c.real, c.imag] for c in row] for row in p.coeffs.tolist()],
                "samples": [[[z.real, z.imag] for z in v[:, j].tolist()]
                            for j in range(p.multiplicity)],
            })
        return json.dumps({"grid": grid.tolist(), "pairs": out})

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        data = json.loads(text)
        pairs = []
        for d in data["pairs"]:
            coeffs = np.array([[complex(re, im) for re, im in row] for row in d["coefficients"]])
            pairs.append(EigenPair(d["eigenvalue"], d["multiplicity"], d["q"], coeffs))
        return cls(tuple(pairs), sum(p.multiplicity for p in pairs))


def golden_min(f, lo, hi, xtol=1e-15, maxiter=200):
    """Golden-section search with an absolute bracket tolerance.

    Unlike scipy's bounded Brent there is no sqrt(eps) relative floor, which
    matters for the V-shaped singular-value minima we localize.
    """
    r = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - r * (b - a), a + r * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if b - a <= xtol * max(1.0, abs(a)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - r * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + r * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _refine(U, lo, hi):
    f = lambda t: float(_absdet(U, np.array([t]))[0])
    q, _ = golden_min(f, lo, hi)
    # |det| only pins double roots to ~sqrt(eps); finish on sigma_min
    h = 1e-6 * max(1.0, abs(q))
    q, val = golden_min(lambda t: float(_gap(U, np.array([t]))[0]),
                        max(lo, q - h), min(hi, q + h))
    return float(q), float(val)


def _scan_segment(U, qs):
    f = _realdet(U, qs)
    g = lambda t: float(_realdet(U, np.array([t]))[0])
    roots = [q for q, v in zip(qs, f) if v == 0.0]
    for i in range(len(qs) - 1):
        if f[i] * f[i + 1] < 0:
            roots.append(brentq(g, qs[i], qs[i + 1], xtol=1e-15, rtol=1e-15))
    for i in range(1, len(qs) - 1):
        sg = math.copysign(1.0, f[i])
        if not (sg * f[i - 1] > 0 and sg * f[i + 1] > 0):
            continue
        if sg * f[i] <= sg * f[i - 1] and sg * f[i] < sg * f[i + 1]:
            # extremum pointing at zero: either a close pair or a double root
            lo, hi = qs[i - 1], qs[i + 1]
            qm, vm = golden_min(lambda t: sg * g(t), lo, hi)
            if vm < 0:
                roots.append(brentq(g, lo, qm, xtol=1e-15, rtol=1e-15))
                roots.append(brentq(g, qm, hi, xtol=1e-15, rtol=1e-15))
            else:
                q, val = _refine(U, lo, hi)
                if val < ROOT_TOL:
                    roots.append(q)
    return roots


def _scan(U, qmin, qmax, density):
    """Roots of the secular determinant for q in [qmin, qmax].

    The basis switch at q = -1 changes the determinant by a factor, so the
    deep-negative range is scanned as its own segment.
    """
    segments = []
    if qmin < -1.0:
        n = int(math.ceil((-1.0 - qmin) * density)) + 1
        segments.append(np.linspace(qmin, -1.0 - 1e-12, n))
    lo = max(qmin, -1.0)
    n = int(math.ceil((qmax - lo) * density)) + 1
    # q = 0 is a legitimate root (zero mode); keep it on the grid
    segments.append(np.union1d(np.linspace(lo, qmax, n), [0.0]))
    found = []
    for qs in segments:
        found += _scan_segment(U, qs)
    roots = []
    for q in sorted(found):
        # the same double root can be reached as a near-touch and as a pair of
        # round-off sign changes; keep the best-converged copy
        if roots and q - roots[-1] <= 1e-7 * max(1.0, abs(q)):
            if _gap(U, q)[0] < _gap(U, roots[-1])[0]:
                roots[-1] = q
            continue
        roots.append(q)
    return [float(q) for q in roots if _gap(U, q)[0] < ROOT_TOL]


def _same_roots(a, b):
    return len(a) == len(b) and all(abs(x - y) <= 1e-8 * max(1.0, abs(x)) for x, y in zip(a, b))


def _pair_at(U, q, x):
    if abs(q) < 1e-13:
        q = 0.0
    M = _secular_batch(U, np.array([q]))[0]
    _, sv, vh = np.linalg.svd(M)
    sc = _scale(q)
    mult = int(np.sum(sv / sc < MULT_TOL))
    mult = max(mult, 1)
    C = vh[-mult:].conj().T  # (2, mult)
    c, s = _basis(q, x)
    basis = np.stack([c, s], axis=-1)  # (nx, 2)
    S = simpson(basis.conj()[:, :, None] * basis[:, None, :], x=x, axis=0)
    G = C.conj().T @ S @ C
    L = np.linalg.cholesky(G)
    C = C @ np.linalg.inv(L.conj().T)
    if mult == 1:
        v = basis @ C[:, 0]
        j = int(np.argmax(np.abs(v)))
        C = C * (abs(v[j]) / v[j])
    E = math.copysign(q * q / 2.0, q)
    return EigenPair(E, mult, q, C)


def solve_spectrum(bc, N: int, kappa_max: float = 50.0, density: float = 40.0) -> Spectrum:
    """Lowest N eigenvalues (with multiplicity) of the U-extension on [0, 1]."""
    U = as_unitary(bc, Domain.INTERVAL)
    if N < 1:
        raise ValueError("N must be at least 1")
    x = np.linspace(0.0, 1.0, QUAD_PANELS + 1)
    for qmax in ((N + 4) * math.pi, (N + 4) * 2 * math.pi):
        roots = _scan(U.matrix, -kappa_max, qmax, density)
        d = density
        for _ in range(4):
            finer = _scan(U.matrix, -kappa_max, qmax, 2 * d)
            if _same_roots(roots, finer):
                break
            roots, d = finer, 2 * d
        else:
            raise RootFindingFailure("root set did not stabilize under grid refinement")
        pairs, count = [], 0
        for q in roots:
            p = _pair_at(U.matrix, q, x)
            pairs.append(p)
            count += p.multiplicity
            if count >= N:
                return Spectrum(tuple(pairs), N, U)
    raise RootFindingFailure(f"found only {count} eigenfunctions below k={qmax:.1f}; wanted {N}")


def modes_needed(T: float, tail_tol: float) -> int:
    """Mode count whose Weyl-estimated cutoff satisfies exp(-lambda_max T) < tail_tol."""
    kmax = math.sqrt(2.0 * math.log(1.0 / tail_tol) / T)
    return int(math.ceil(kmax / math.pi)) + 4


def spectral_heat_kernel(spec: Spectrum, T: float, x, y, tail_tol: float = 1e-12):
    """Truncated eigensum sum_n exp(-lambda_n T) psi_n(x) conj(psi_n(y))."""
    if T <= 0:
        raise ValueError("T must be positive")
    if math.exp(-spec.lambda_max * T) >= tail_tol:
        raise InsufficientSpectrum(
            f"exp(-lambda_max T) = {math.exp(-spec.lambda_max * T):.2e} >= {tail_tol:.1e}; "
            "request more modes")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lam, px = spec.modes(x)
    _, py = spec.modes(y)
    out = np.sum(np.exp(-lam * T) * px * py.conj(), axis=-1)
    return out if out.ndim else complex(out)
