"""Domains, boundary unitaries and the catalogue of named boundary conditions.

A self-adjoint extension of H = -1/2 d^2/dx^2 is labelled by a unitary matrix U
acting on boundary data: the wave function is in the domain iff

    phi - i*phidot = U (phi + i*phidot)

where phi are the boundary values and phidot the *outward* normal derivatives,
phidot(0) = -psi'(0) and phidot(1) = +psi'(1).
"""
from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import IncompatibleDomain, NonUnitary, UsageError

UNITARY_TOL = 1e-12


class Domain(enum.Enum):
    HALF_LINE = "halfline"
    INTERVAL = "interval"

    @property
    def n_boundary(self) -> int:
        return 1 if self is Domain.HALF_LINE else 2

    @property
    def boundary_points(self) -> tuple[float, ...]:
        return (0.0,) if self is Domain.HALF_LINE else (0.0, 1.0)

    @property
    def outward_signs(self) -> tuple[float, ...]:
        return (-1.0,) if self is Domain.HALF_LINE else (-1.0, 1.0)

    def contains(self, x, interior=False) -> bool:
        x = np.asarray(x, dtype=float)
        if interior:
            ok = x > 0 if self is Domain.HALF_LINE else (x > 0) & (x < 1)
        else:
            ok = x >= 0 if self is Domain.HALF_LINE else (x >= 0) & (x <= 1)
        return bool(np.all(ok))

    @classmethod
    def parse(cls, text: str) -> "Domain":
        key = text.strip().lower().replace("-", "").replace("_", "")
        aliases = {"halfline": cls.HALF_LINE, "interval": cls.INTERVAL,
                   "unitinterval": cls.INTERVAL}
        try:
            return aliases[key]
        except KeyError:
            raise UsageError(f"unknown domain {text!r}; use 'halfline' or 'interval'") from None


def unitarity_defect(matrix) -> float:
    m = np.asarray(matrix, dtype=complex)
    return float(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))))


@dataclass(frozen=True, eq=False)
class BoundaryUnitary:
    """Unitary matrix on boundary data, one row/column per boundary point."""

    domain: Domain
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape != (self.domain.n_boundary,) * 2:
            raise NonUnitary(
                f"{self.domain.value} needs a {self.domain.n_boundary}x{self.domain.n_boundary} "
                f"matrix, got shape {m.shape}")
        defect = unitarity_defect(m)
        if not defect <= UNITARY_TOL:
            raise NonUnitary(f"matrix is not unitary (max |UU^+ - I| = {defect:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def size(self) -> int:
        return self.domain.n_boundary

    def __matmul__(self, other: "BoundaryUnitary") -> "BoundaryUnitary":
        if other.domain is not self.domain:
            raise IncompatibleDomain("cannot compose unitaries on different domains")
        return BoundaryUnitary(self.domain, self.matrix @ other.matrix)

    def allclose(self, other: "BoundaryUnitary", tol: float = UNITARY_TOL) -> bool:
        return self.domain is other.domain and bool(
            np.max(np.abs(self.matrix - other.matrix)) <= tol)

    def __repr__(self):
        return f"BoundaryUnitary({self.domain.value}, {self.matrix.tolist()})"


@dataclass(frozen=True, eq=False)
class BoundaryData:
    domain: Domain
    value: np.ndarray
    normal_derivative: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.value, dtype=complex))
        d = np.atleast_1d(np.asarray(self.normal_derivative, dtype=complex))
        n = self.domain.n_boundary
        if v.shape != (n,) or d.shape != (n,):
            raise UsageError(f"boundary data on {self.domain.value} needs {n} entries")
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "normal_derivative", d)

    @classmethod
    def from_values(cls, domain: Domain, psi, dpsi) -> "BoundaryData":
        """Build from psi and d(psi)/dx at the boundary points (x=0 first)."""
        signs = np.array(domain.outward_signs)
        return cls(domain, psi, signs * np.atleast_1d(np.asarray(dpsi, dtype=complex)))


def bc_residual(U: BoundaryUnitary, data: BoundaryData) -> float:
    if U.domain is not data.domain:
        raise IncompatibleDomain("unitary and boundary data live on different domains")
    phi, dphi = data.value, data.normal_derivative
    r = (phi - 1j * dphi) - U.matrix @ (phi + 1j * dphi)
    return float(np.max(np.abs(r)))


def satisfies_bc(U: BoundaryUnitary, data: BoundaryData, tol: float = 1e-10) -> bool:
    return bc_residual(U, data) <= tol


# --------------------------------------------------------------------------
# named boundary conditions

class NamedBC:
    """Base for the catalogue entries. Subclasses are small frozen dataclasses."""

    domains: tuple[Domain, ...] = (Domain.HALF_LINE, Domain.INTERVAL)

    def _matrix(self, domain: Domain) -> np.ndarray:
        raise NotImplementedError

    def text(self) -> str:
        raise NotImplementedError

    def default_domain(self) -> Domain | None:
        return self.domains[0] if len(self.domains) == 1 else None


@dataclass(frozen=True)
class Neumann(NamedBC):
    def _matrix(self, domain):
        return np.eye(domain.n_boundary)

    def text(self):
        return "neumann"


@dataclass(frozen=True)
class Dirichlet(NamedBC):
    def _matrix(self, domain):
        return -np.eye(domain.n_boundary)

    def text(self):
        return "dirichlet"


@dataclass(frozen=True)
class Robin(NamedBC):
    """Half-line mixed condition psi'(0) = tan(alpha/2) psi(0); U = exp(i alpha)."""

    alpha: float
    domains = (Domain.HALF_LINE,)

    def _matrix(self, domain):
        return np.array([[np.exp(1j * self.alpha)]])

    def text(self):
        return f"robin:alpha={self.alpha!r}"


@dataclass(frozen=True)
class Periodic(NamedBC):
    domains = (Domain.INTERVAL,)

    def _matrix(self, domain):
        return np.array([[0.0, 1.0], [1.0, 0.0]])

    def text(self):
        return "periodic"


@dataclass(frozen=True)
class PseudoPeriodic(NamedBC):
    """psi(1) = e^{i eps} psi(0), psi'(1) = e^{i eps} psi'(0)."""

    eps: float
    domains = (Domain.INTERVAL,)

    def _matrix(self, domain):
        return np.array([[0.0, np.exp(-1j * self.eps)], [np.exp(1j * self.eps), 0.0]])

    def text(self):
        return f"pseudo:eps={self.eps!r}"


@dataclass(frozen=True)
class QuasiPeriodic(NamedBC):
    alpha: float
    domains = (Domain.INTERVAL,)

    def _matrix(self, domain):
        c, s = math.cos(self.alpha), math.sin(self.alpha)
        return np.array([[c, s], [s, -c]])

    def text(self):
        return f"quasi:alpha={self.alpha!r}"


@dataclass(frozen=True)
class DeltaPoint(NamedBC):
    """Circle with a point defect; equivalent to -d^2/dx^2 + a*delta(x) on the circle."""

    a: float
    domains = (Domain.INTERVAL,)

    def _matrix(self, domain):
        ia = 1j * self.a
        return np.array([[ia, 2.0], [2.0, ia]]) / (2.0 - ia)

    def text(self):
        return f"delta:a={self.a!r}"


@dataclass(frozen=True, eq=False)
class Custom(NamedBC):
    matrix: np.ndarray = field(default_factory=lambda: np.eye(1))

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.array(self.matrix, dtype=complex))

    @property
    def domains(self):
        n = self.matrix.shape[0]
        return (Domain.HALF_LINE,) if n == 1 else (Domain.INTERVAL,)

    def _matrix(self, domain):
        return self.matrix

    def text(self):
        pairs = [[float(v.real), float(v.imag)] for v in self.matrix.ravel()]
        return "custom:" + json.dumps(pairs, separators=(",", ":"))


def to_unitary(bc: NamedBC, domain: Domain | None = None) -> BoundaryUnitary:
    if domain is None:
        domain = bc.default_domain()
        if domain is None:
            raise IncompatibleDomain(f"{bc.text()} needs an explicit domain")
    if domain not in bc.domains:
        raise IncompatibleDomain(f"{bc.text()} is not defined on the {domain.value}")
    return BoundaryUnitary(domain, bc._matrix(domain))


def as_unitary(bc, domain: Domain | None = None) -> BoundaryUnitary:
    """Accept either a NamedBC or an already-built BoundaryUnitary."""
    if isinstance(bc, BoundaryUnitary):
        if domain is not None and domain is not bc.domain:
            raise IncompatibleDomain("unitary and requested domain differ")
        return bc
    return to_unitary(bc, domain)


# --------------------------------------------------------------------------
# canonical text form

_PARAM = re.compile(r"^(\w+)=(.+)$")
BC_SYNTAX = ('neumann | dirichlet | robin:alpha=<float> | periodic | pseudo:eps=<float> | '
             'quasi:alpha=<float> | delta:a=<float> | custom:[[re,im],...]')


def parse_bc(text: str) -> NamedBC:
    raw = text.strip()
    head, _, rest = raw.partition(":")
    head = head.lower()
    if head in ("neumann", "dirichlet", "periodic") and not rest:
        return {"neumann": Neumann, "dirichlet": Dirichlet, "periodic": Periodic}[head]()
    if head == "custom":
        try:
            pairs = json.loads(rest)
            vals = np.array([complex(float(p[0]), float(p[1])) for p in pairs])
        except (ValueError, TypeError, IndexError, KeyError):
            raise UsageError(f"bad custom matrix {rest!r}; example: "
                             "custom:[[0,0],[1,0],[1,0],[0,0]]") from None
        n = int(round(math.sqrt(len(vals))))
        if n * n != len(vals) or n not in (1, 2):
            raise UsageError("custom matrix needs 1 or 4 [re,im] entries (row-major)")
        return Custom(vals.reshape(n, n))
    expected = {"robin": ("alpha", Robin), "pseudo": ("eps", PseudoPeriodic),
                "quasi": ("alpha", QuasiPeriodic), "delta": ("a", DeltaPoint)}
    if head in expected:
        name, cls = expected[head]
        m = _PARAM.match(rest)
        if m and m.group(1) == name:
            try:
                return cls(float(m.group(2)))
            except ValueError:
                pass
        raise UsageError(f"bad boundary condition {raw!r}; expected {head}:{name}=<float>")
    raise UsageError(f"unknown boundary condition {raw!r}; valid forms: {BC_SYNTAX}")


CATALOG = (Neumann(), Dirichlet(), Robin(0.0), Periodic(), PseudoPeriodic(0.0),
           QuasiPeriodic(0.0), DeltaPoint(0.0))
