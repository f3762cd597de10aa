"""Command-line interface: ``bcpath <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 numerical failure (including a
comparison that fails its tolerance).
"""
from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import path_mc
from .bc import (BC_SYNTAX, CATALOG, Dirichlet, Domain, NamedBC, Neumann, Periodic, PseudoPeriodic,
                 parse_bc, to_unitary)
from .errors import BCPathError, MethodUnavailable, NoImageForm, NumericalFailure, UsageError
from .propagator import (evolve_packet, gaussian_packet, image_sum_kernel, inverse_laplace_kernel,
                         spectral_kernel)
from .resolvent import closed_form_resolvent, find_bound_states, krein_resolvent
from .spectral import modes_needed, solve_spectrum

KERNEL_METHODS = ("images", "spectral", "inverse-laplace", "mc")
MC_STEPS = 64


class CommandKind(enum.Enum):
    BC_LIST = "bc-list"
    RESOLVENT = "resolvent"
    KERNEL = "kernel"
    SPECTRUM = "spectrum"
    MC = "mc"
    COMPARE = "compare"
    EVOLVE = "evolve"


COLUMNS = {
    CommandKind.BC_LIST: ("name", "syntax", "domains"),
    CommandKind.RESOLVENT: ("x", "y", "z_re", "z_im", "re", "im"),
    CommandKind.KERNEL: ("x", "y", "T", "re", "im"),
    CommandKind.SPECTRUM: ("index", "eigenvalue", "multiplicity", "q"),
    CommandKind.MC: ("method", "bc", "x", "y", "T", "mean_re", "mean_im", "std_error",
                     "n_paths", "n_steps", "seed"),
    CommandKind.COMPARE: ("x", "y", "T", "method", "re", "im", "std_error"),
    CommandKind.EVOLVE: ("x", "re", "im"),
}


@dataclass
class Command:
    kind: CommandKind
    domain: Domain | None = None
    bc: NamedBC | None = None
    x: tuple = ()
    y: tuple = ()
    T: tuple = ()
    z: tuple = ()
    methods: tuple = ()
    fmt: str = "csv"
    out: str | None = None
    tol: float | None = None
    seed: int = 0
    options: dict = field(default_factory=dict)

    @property
    def method(self) -> str:
        return self.methods[0] if self.methods else ""


# --------------------------------------------------------------------------
# token parsing

def parse_grid(token: str) -> list[float]:
    """'start:stop:count' (inclusive linspace) or a plain number."""
    parts = token.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n >= 1:
                return np.linspace(a, b, n).tolist()
    except ValueError:
        pass
    raise UsageError(f"bad grid {token!r}; use a number or start:stop:count, e.g. 0.1:0.9:5")


def parse_complex(token: str) -> complex:
    parts = token.split(",")
    try:
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
    except ValueError:
        pass
    raise UsageError(f"bad complex number {token!r}; use re,im e.g. 0.5,0")


def _grid(tokens):
    vals = [v for t in tokens or () for v in parse_grid(t)]
    return tuple(vals)


def available_methods(bc: NamedBC, domain: Domain) -> tuple[str, ...]:
    out = []
    if isinstance(bc, (Neumann, Dirichlet, Periodic, PseudoPeriodic)):
        out.append("images")
    if domain is Domain.INTERVAL:
        out.append("spectral")
    out.append("inverse-laplace")
    if isinstance(bc, (Neumann, Dirichlet, Periodic, PseudoPeriodic)):
        out.append("mc")
    return tuple(out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _shared(p, bc=True):
    if bc:
        p.add_argument("--domain", help="halfline | interval (inferred when the bc fixes it)")
        p.add_argument("--bc", required=True, help=BC_SYNTAX)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write to this path instead of stdout")
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bcpath", description="Heat kernels, resolvents and spectra of "
                     "-1/2 d^2/dx^2 under general self-adjoint boundary conditions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    cols = lambda k: "CSV columns: " + ",".join(COLUMNS[k])

    p = sub.add_parser("bc-list", help="list the boundary-condition catalogue",
                       epilog=cols(CommandKind.BC_LIST))
    _shared(p, bc=False)

    p = sub.add_parser("resolvent", help="resolvent kernel C_z(x, y)",
                       epilog=cols(CommandKind.RESOLVENT))
    _shared(p)
    p.add_argument("--z", nargs="+", required=True, help="spectral parameters as re,im")
    p.add_argument("--x", nargs="+", default=["0.25"])
    p.add_argument("--y", nargs="+", default=["0.5"])
    p.add_argument("--method", choices=("krein", "closed"), default="krein")

    p = sub.add_parser("kernel", help="heat kernel K_T(x, y)", epilog=cols(CommandKind.KERNEL))
    _shared(p)
    p.add_argument("--method", choices=KERNEL_METHODS, default="inverse-laplace")
    p.add_argument("--T", nargs="+", required=True)
    p.add_argument("--x", nargs="+", required=True)
    p.add_argument("--y", nargs="+", required=True)
    p.add_argument("--paths", type=int, default=100000, help="paths for --method mc")
    p.add_argument("--steps", type=int, default=MC_STEPS, help="time steps for --method mc")

    p = sub.add_parser("spectrum", help="lowest eigenvalues on the interval",
                       epilog=cols(CommandKind.SPECTRUM) + "; JSON adds sampled eigenfunctions")
    _shared(p)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--kappa-max", type=float, default=50.0)

    p = sub.add_parser("mc", help="Monte Carlo path-integral estimate",
                       epilog=cols(CommandKind.MC))
    _shared(p)
    p.add_argument("--T", nargs="+", required=True)
    p.add_argument("--x", nargs="+", required=True)
    p.add_argument("--y", nargs="+", required=True)
    p.add_argument("--paths", type=int, default=100000)
    p.add_argument("--steps", type=int, default=MC_STEPS)

    p = sub.add_parser("compare", help="evaluate a kernel by several methods and compare",
                       epilog=cols(CommandKind.COMPARE) + "; summary lines start with '#'")
    _shared(p)
    p.add_argument("--methods", required=True, help="comma-separated, e.g. images,spectral")
    p.add_argument("--T", nargs="+", required=True)
    p.add_argument("--x", nargs="+", required=True)
    p.add_argument("--y", nargs="+", required=True)
    p.add_argument("--paths", type=int, default=100000)
    p.add_argument("--steps", type=int, default=MC_STEPS)

    p = sub.add_parser("evolve", help="evolve a Gaussian packet in Euclidean time",
                       epilog=cols(CommandKind.EVOLVE))
    _shared(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--center", type=float, default=0.5)
    p.add_argument("--width", type=float, default=0.05)
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--points", type=int, default=513)
    p.add_argument("--modes", type=int, help="eigenmodes to keep (default: from --tol)")
    return parser


def _check_method(bc, domain, method):
    ok = available_methods(bc, domain)
    if method not in ok:
        err = NoImageForm if method == "images" else MethodUnavailable
        raise err(f"method {method!r} is not available for {bc.text()} on the "
                  f"{domain.value}; valid methods: {', '.join(ok)}")


def parse_invocation(argv) -> Command:
    args = build_parser().parse_args(list(argv))
    kind = CommandKind(args.command)
    cmd = Command(kind, fmt=args.format, out=args.out, tol=args.tol, seed=args.seed)
    if not 0 <= cmd.seed < 2 ** 64:
        raise UsageError(f"--seed {cmd.seed} does not fit in an unsigned 64-bit integer")
    if kind is CommandKind.BC_LIST:
        return cmd
    cmd.bc = parse_bc(args.bc)
    cmd.domain = to_unitary(cmd.bc, Domain.parse(args.domain) if args.domain else None).domain
    for name in ("x", "y", "T"):
        if hasattr(args, name) and isinstance(getattr(args, name), list):
            setattr(cmd, name, _grid(getattr(args, name)))
    if kind is CommandKind.RESOLVENT:
        cmd.z = tuple(parse_complex(t) for t in args.z)
        cmd.methods = (args.method,)
    elif kind in (CommandKind.KERNEL, CommandKind.MC):
        cmd.methods = (args.method,) if kind is CommandKind.KERNEL else ("mc",)
        _check_method(cmd.bc, cmd.domain, cmd.method)
        cmd.options = {"paths": args.paths, "steps": args.steps}
    elif kind is CommandKind.COMPARE:
        methods = tuple(dict.fromkeys(m.strip() for m in args.methods.split(",") if m.strip()))
        for m in methods:
            if m not in KERNEL_METHODS:
                raise UsageError(f"unknown method {m!r}; choose from {', '.join(KERNEL_METHODS)}")
            _check_method(cmd.bc, cmd.domain, m)
        if len(methods) < 2:
            raise MethodUnavailable("compare needs at least two methods; this bc supports "
                                    + ", ".join(available_methods(cmd.bc, cmd.domain)))
        cmd.methods = methods
        cmd.options = {"paths": args.paths, "steps": args.steps}
    elif kind is CommandKind.SPECTRUM:
        if cmd.domain is not Domain.INTERVAL:
            raise MethodUnavailable("spectra are computed on the interval only")
        if args.n < 1:
            raise UsageError("--n must be at least 1")
        cmd.options = {"n": args.n, "kappa_max": args.kappa_max}
    elif kind is CommandKind.EVOLVE:
        if cmd.domain is not Domain.INTERVAL:
            raise MethodUnavailable("packet evolution uses the eigenbasis; interval only")
        if not (args.width > 0 and args.points >= 3 and args.T >= 0):
            raise UsageError("evolve needs --width > 0, --points >= 3 and --T >= 0")
        cmd.T = (args.T,)
        cmd.options = {"center": args.center, "width": args.width, "momentum": args.momentum,
                       "points": args.points, "modes": args.modes}
    for name in ("x", "y", "T"):
        if kind not in (CommandKind.SPECTRUM,) and getattr(cmd, name) == () and \
                name in vars(args):
            raise UsageError(f"--{name} grid is empty")
    if kind in (CommandKind.KERNEL, CommandKind.MC, CommandKind.COMPARE) and \
            min(cmd.T) <= 0:
        raise UsageError(f"--T values must be positive, got {min(cmd.T)}; e.g. --T 0.05:1:5")
    return cmd


# --------------------------------------------------------------------------
# evaluation

def _points(cmd):
    return [(x, y, T) for x in cmd.x for y in cmd.y for T in cmd.T]


class KernelRoutes:
    """Lazily built evaluators for every kernel method on one (bc, domain)."""

    def __init__(self, cmd: Command):
        self.cmd = cmd
        self.U = to_unitary(cmd.bc, cmd.domain)
        self._spec = {}
        self._family = None
        self._poles = None

    def spectrum_for(self, T):
        tail = self.cmd.tol if self.cmd.kind is CommandKind.KERNEL and self.cmd.tol else 1e-12
        n = modes_needed(T, tail)
        if n not in self._spec:
            self._spec[n] = solve_spectrum(self.U, n)
        return self._spec[n], tail

    def value(self, method, x, y, T):
        """(value, std_error) at one point."""
        bc, domain = self.cmd.bc, self.cmd.domain
        if method == "images":
            return image_sum_kernel(bc, domain, T, x, y), 0.0
        if method == "spectral":
            spec, tail = self.spectrum_for(T)
            return spectral_kernel(spec, tail)(x, y, T), 0.0
        if method == "inverse-laplace":
            if self._family is None:
                self._family = krein_resolvent(self.U, 1.0)
                self._poles = find_bound_states(self.U)
            return inverse_laplace_kernel(self._family, T, x, y, self._poles), 0.0
        if method == "mc":
            est = run_mc_point(self.cmd, x, y, T)
            return est.mean, est.std_error
        raise MethodUnavailable(method)


def run_mc_point(cmd: Command, x, y, T) -> path_mc.McEstimate:
    cfg = path_mc.McConfig(cmd.options.get("paths", 100000), cmd.options.get("steps", MC_STEPS),
                           cmd.seed, T, x, y)
    bc = cmd.bc
    if isinstance(bc, Dirichlet):
        return path_mc.mc_dirichlet_kernel(cfg, cmd.domain)
    if isinstance(bc, Neumann):
        return path_mc.mc_neumann_kernel(cfg, cmd.domain)
    if isinstance(bc, (Periodic, PseudoPeriodic)):
        eps = bc.eps if isinstance(bc, PseudoPeriodic) else 0.0
        return path_mc.mc_winding_kernel(cfg, eps)
    raise MethodUnavailable(f"no path-integral estimator for {bc.text()}")


def run_compare(cmd: Command) -> dict:
    """Per-point values for each method plus discrepancy summary.

    Deterministic methods are compared with the first deterministic method by
    relative difference (denominator floored at 1e-8 of the largest reference
    value, so kernels vanishing at a Dirichlet wall do not blow up); Monte Carlo
    rows pass when |difference| < 3 std_error.
    """
    tol = cmd.tol if cmd.tol is not None else 1e-6
    routes = KernelRoutes(cmd)
    pts = _points(cmd)
    table = {m: [routes.value(m, *p) for p in pts] for m in cmd.methods}
    exact = [m for m in cmd.methods if m != "mc"]
    ref_m = exact[0]
    ref = np.array([v for v, _ in table[ref_m]])
    floor = 1e-8 * float(np.max(np.abs(ref))) if ref.size else 0.0
    summary = {}
    status = True
    for m in cmd.methods:
        if m == ref_m:
            continue
        vals = np.array([v for v, _ in table[m]])
        err = np.array([e for _, e in table[m]])
        diff = np.abs(vals - ref)
        entry = {"max_abs": float(np.max(diff)),
                 "max_rel": float(np.max(diff / np.maximum(np.abs(ref), max(floor, 1e-300))))}
        if m == "mc":
            sig = np.where(err > 0, diff / np.where(err > 0, err, 1.0), 0.0)
            entry["max_sigma"] = float(np.max(sig))
            entry["pass"] = bool(np.all(diff < 3.0 * err + 1e-9 * np.maximum(np.abs(ref), 1.0)))
        else:
            entry["pass"] = entry["max_rel"] < tol
        status &= entry["pass"]
        summary[m] = entry
    rows = [(x, y, T, m, complex(table[m][i][0]), float(table[m][i][1]))
            for i, (x, y, T) in enumerate(pts) for m in cmd.methods]
    return {"reference": ref_m, "tol": tol, "rows": rows, "summary": summary,
            "status": "PASS" if status else "FAIL"}


def execute(cmd: Command) -> tuple[list[tuple], dict]:
    """Rows in COLUMNS[cmd.kind] order, plus extra JSON-only payload."""
    k = cmd.kind
    if k is CommandKind.BC_LIST:
        rows = []
        for bc in CATALOG:
            rows.append((type(bc).__name__, bc.text(), "|".join(d.value for d in bc.domains)))
        rows.append(("Custom", "custom:[[re,im],...]", "halfline|interval"))
        return rows, {}
    if k is CommandKind.RESOLVENT:
        rows = []
        for z in cmd.z:
            r = (krein_resolvent(to_unitary(cmd.bc, cmd.domain), z) if cmd.method == "krein"
                 else closed_form_resolvent(cmd.bc, z, cmd.domain))
            for x in cmd.x:
                for y in cmd.y:
                    v = complex(r(x, y))
                    rows.append((x, y, z.real, z.imag, v.real, v.imag))
        return rows, {}
    if k is CommandKind.KERNEL:
        routes = KernelRoutes(cmd)
        rows = []
        for x, y, T in _points(cmd):
            v = complex(routes.value(cmd.method, x, y, T)[0])
            rows.append((x, y, T, v.real, v.imag))
        return rows, {}
    if k is CommandKind.MC:
        rows = []
        for x, y, T in _points(cmd):
            d = run_mc_point(cmd, x, y, T).to_dict()
            rows.append(tuple(d[c] for c in COLUMNS[k]))
        return rows, {}
    if k is CommandKind.SPECTRUM:
        spec = solve_spectrum(to_unitary(cmd.bc, cmd.domain), cmd.options["n"],
                              cmd.options["kappa_max"])
        rows = [(i, p.eigenvalue, p.multiplicity, p.q) for i, p in enumerate(spec.pairs)]
        return rows, {"spectrum": json.loads(spec.to_json())}
    if k is CommandKind.COMPARE:
        rep = run_compare(cmd)
        rows = [(x, y, T, m, v.real, v.imag, e) for x, y, T, m, v, e in rep["rows"]]
        return rows, {"reference": rep["reference"], "tol": rep["tol"],
                      "summary": rep["summary"], "status": rep["status"]}
    if k is CommandKind.EVOLVE:
        o = cmd.options
        T = cmd.T[0]
        tol = cmd.tol if cmd.tol is not None else 1e-12
        n = o["modes"] or (modes_needed(T, tol) if T > 0 else 64)
        spec = solve_spectrum(to_unitary(cmd.bc, cmd.domain), n)
        psi = gaussian_packet(o["center"], o["width"], o["points"], o["momentum"])
        out = evolve_packet(psi, spec, T, tol)
        rows = [(x, v.real, v.imag) for x, v in zip(out.x.tolist(), out.values.tolist())]
        return rows, {"norm": out.norm()}
    raise UsageError(f"unknown command {k}")  # pragma: no cover


def _header(cmd):
    h = {"command": cmd.kind.value}
    if cmd.bc is not None:
        h.update(bc=cmd.bc.text(), domain=cmd.domain.value)
    if cmd.methods:
        h["methods"] = list(cmd.methods)
    return h


def render(cmd: Command, rows, extra) -> str:
    cols = COLUMNS[cmd.kind]
    if cmd.fmt == "json":
        doc = _header(cmd)
        doc["columns"] = list(cols)
        doc["rows"] = [dict(zip(cols, r)) for r in rows]
        doc.update(extra)
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        # repr keeps every float bit-exact through a text round trip
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    if cmd.kind is CommandKind.COMPARE:
        for m, s in extra["summary"].items():
            buf.write(f"# {m} vs {extra['reference']}: "
                      + " ".join(f"{k}={v}" for k, v in s.items()) + "\n")
        buf.write(f"# status={extra['status']} tol={extra['tol']}\n")
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    """Parse CSV emitted by this tool (comment lines skipped), numbers as floats."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        row = {}
        for k, v in rec.items():
            try:
                row[k] = int(v) if v.lstrip("-").isdigit() else float(v)
            except ValueError:
                row[k] = v
        out.append(row)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cmd = parse_invocation(argv)
        rows, extra = execute(cmd)
        text = render(cmd, rows, extra)
    except (UsageError, ValueError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except NumericalFailure as e:
        print(f"numerical failure ({type(e).__name__}): {e}", file=sys.stderr)
        return 2
    except BCPathError as e:  # pragma: no cover - every error is one of the two kinds
        print(f"error: {e}", file=sys.stderr)
        return 2
    if cmd.out:
        with open(cmd.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cmd.kind is CommandKind.COMPARE and extra["status"] != "PASS":
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
