"""Monte Carlo path-integral estimators for the path-wise boundary conditions.

Every estimator samples Brownian bridges from x to y in time T (or, for the
winding sums, only their winding number) and reweights them:

* Dirichlet: paths touching the boundary get weight 0;
* Neumann: every alternating visit to the boundary doubles the weight, which
  reproduces the image sum term by term;
* periodic / pseudo-periodic: paths ending at y + m carry exp(i eps m).

Random numbers come from Philox streams keyed by (seed, block index), so an
estimate depends only on (seed, cfg) and not on how blocks are scheduled.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .bc import Domain
from .errors import EndpointOnBoundary, IncompatibleDomain, UsageError, WindingTruncation
from .propagator import free_kernel

BLOCK = 4096
WINDING_SIGMAS = 8.0
WINDING_TOL = 1e-12


@dataclass(frozen=True)
class McConfig:
    n_paths: int
    n_steps: int
    seed: int
    T: float
    x: float
    y: float

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise UsageError(f"n_paths must be a positive integer, got {self.n_paths}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise UsageError(f"n_steps must be an integer >= 2, got {self.n_steps}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise UsageError("seed must fit in an unsigned 64-bit integer")
        if not self.T > 0:
            raise UsageError(f"T must be positive, got {self.T}")


@dataclass(frozen=True)
class McEstimate:
    mean: complex
    std_error: float
    n_paths: int
    method: str
    bc: str = ""
    x: float = 0.0
    y: float = 0.0
    T: float = 0.0
    n_steps: int = 0
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        m = d.pop("mean")
        return {"method": d["method"], "bc": d["bc"], "x": d["x"], "y": d["y"], "T": d["T"],
                "mean_re": float(m.real), "mean_im": float(m.imag),
                "std_error": float(d["std_error"]), "n_paths": d["n_paths"],
                "n_steps": d["n_steps"], "seed": d["seed"]}

    @classmethod
    def from_dict(cls, d: dict) -> "McEstimate":
        return cls(complex(d["mean_re"], d["mean_im"]), float(d["std_error"]), int(d["n_paths"]),
                   d["method"], d.get("bc", ""), float(d["x"]), float(d["y"]), float(d["T"]),
                   int(d["n_steps"]), int(d["seed"]))

    def within(self, value, n_sigma: float = 3.0) -> bool:
        # zero-variance estimates (periodic windings, short-time Dirichlet) still
        # differ from the exact value by round-off and by events too rare to sample
        slack = 1e-9 * max(1.0, abs(value))
        return abs(self.mean - value) <= n_sigma * self.std_error + slack


# --------------------------------------------------------------------------
# random streams

def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def _blocks(n_paths):
    starts = range(0, n_paths, BLOCK)
    return [(b, min(BLOCK, n_paths - s)) for b, s in enumerate(starts)]


def _reduce(cfg, weight_fn, workers=None):
    """Mean and standard error of weight_fn(rng, n) over all blocks.

    Partial sums are combined in block order, so the result is bit-identical
    whatever the number of workers.
    """
    def run(task):
        b, n = task
        w = np.asarray(weight_fn(block_rng(cfg.seed, b), n))
        return w.sum(), np.sum(np.abs(w) ** 2)

    tasks = _blocks(cfg.n_paths)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, tasks))
    else:
        parts = [run(t) for t in tasks]
    s = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    n = cfg.n_paths
    mean = s / n
    var = max(s2 / n - abs(mean) ** 2, 0.0) * n / max(n - 1, 1)
    return complex(mean), math.sqrt(var / n)


# --------------------------------------------------------------------------
# bridges

def sample_bridge(rng, n, cfg: McConfig) -> np.ndarray:
    """(n, n_steps + 1) bridge values at t_k = k T / n_steps, exact in law."""
    dt = cfg.T / cfg.n_steps
    t = np.linspace(0.0, 1.0, cfg.n_steps + 1)
    W = np.zeros((n, cfg.n_steps + 1))
    W[:, 1:] = np.cumsum(rng.standard_normal((n, cfg.n_steps)) * math.sqrt(dt), axis=1)
    return cfg.x + W - t * W[:, -1:] + t * (cfg.y - cfg.x)


def crossing_probability(a, b, dt):
    """P(bridge between signed distances a and b touches the level 0 within dt)."""
    p = np.exp(-2.0 * a * b / dt)
    return np.where(a * b <= 0.0, 1.0, np.minimum(p, 1.0))


def _check_endpoints(cfg, domain):
    if not (domain.contains(cfg.x) and domain.contains(cfg.y)):
        raise UsageError(f"endpoints ({cfg.x}, {cfg.y}) lie outside the {domain.value}")


def _survival(B, dt, domain):
    w = np.prod(1.0 - crossing_probability(B[:, :-1], B[:, 1:], dt), axis=1)
    if domain is Domain.INTERVAL:
        C = 1.0 - B
        w = w * np.prod(1.0 - crossing_probability(C[:, :-1], C[:, 1:], dt), axis=1)
    return w


def mc_dirichlet_kernel(cfg: McConfig, domain: Domain, workers=None) -> McEstimate:
    """K_free(x, y; T) times the survival probability of the bridge."""
    _check_endpoints(cfg, domain)
    if not (domain.contains(cfg.x, interior=True) and domain.contains(cfg.y, interior=True)):
        raise EndpointOnBoundary("Dirichlet kernel vanishes when an endpoint is on the boundary")
    dt = cfg.T / cfg.n_steps

    def weights(rng, n):
        return _survival(sample_bridge(rng, n, cfg), dt, domain)

    mean, err = _reduce(cfg, weights, workers)
    g = float(free_kernel(cfg.x - cfg.y, cfg.T))
    return McEstimate(g * mean, g * err, cfg.n_paths, "mc-dirichlet", "dirichlet",
                      cfg.x, cfg.y, cfg.T, cfg.n_steps, cfg.seed)


def _alternations(first, second):
    """Length of the compressed (alternating) face sequence per path.

    first/second are (n, steps) arrays of face labels (-1 for no visit) in
    visiting order within each step.
    """
    n = first.shape[0]
    ev = np.stack([first, second], axis=2).reshape(n, -1)
    valid = ev >= 0
    idx = np.where(valid, np.arange(ev.shape[1]), -1)
    last = np.maximum.accumulate(idx, axis=1)
    prev = np.full_like(last, -1)
    prev[:, 1:] = last[:, :-1]
    prev_face = np.where(prev >= 0, np.take_along_axis(ev, np.maximum(prev, 0), axis=1), -1)
    return np.sum(valid & (ev != prev_face), axis=1)


def mc_neumann_kernel(cfg: McConfig, domain: Domain, workers=None) -> McEstimate:
    """Bridge paths weighted by 2 m, m = number of alternating boundary visits.

    On the half-line this is weight 2 for paths touching 0 and 1 otherwise. On
    the interval a path whose visits alternate m times between the faces is
    counted by m reflections starting at each face plus the direct term, i.e.
    1 + m + (m - 1) = 2 m. Visits within a step are drawn with the exact bridge
    hitting probability, so the estimator has no discretization bias on the
    half-line and only the two-faces-in-one-step error on the interval.
    """
    _check_endpoints(cfg, domain)
    dt = cfg.T / cfg.n_steps

    def weights(rng, n):
        B = sample_bridge(rng, n, cfg)
        u = rng.random((2, n, cfg.n_steps))
        hit0 = u[0] < crossing_probability(B[:, :-1], B[:, 1:], dt)
        if domain is Domain.HALF_LINE:
            return np.where(hit0.any(axis=1), 2.0, 1.0)
        C = 1.0 - B
        hit1 = u[1] < crossing_probability(C[:, :-1], C[:, 1:], dt)
        zero_first = np.abs(B[:, :-1]) <= np.abs(C[:, :-1])
        f0 = np.where(hit0, 0, -1)
        f1 = np.where(hit1, 1, -1)
        first = np.where(zero_first, f0, f1)
        second = np.where(zero_first, f1, f0)
        m = _alternations(first, second)
        return np.maximum(2.0 * m, 1.0)

    mean, err = _reduce(cfg, weights, workers)
    g = float(free_kernel(cfg.x - cfg.y, cfg.T))
    return McEstimate(g * mean, g * err, cfg.n_paths, "mc-neumann", "neumann",
                      cfg.x, cfg.y, cfg.T, cfg.n_steps, cfg.seed)


# --------------------------------------------------------------------------
# windings

def winding_window(cfg: McConfig, n_sigmas: float = WINDING_SIGMAS) -> np.ndarray:
    """Winding numbers m with |y + m - x| <= n_sigmas sqrt(T) + 2."""
    half = n_sigmas * math.sqrt(cfg.T) + 2.0
    lo = math.ceil(cfg.x - cfg.y - half)
    hi = math.floor(cfg.x - cfg.y + half)
    return np.arange(lo, hi + 1)


def mc_winding_kernel(cfg: McConfig, epsilon: float, n_sigmas: float = WINDING_SIGMAS,
                      workers=None) -> McEstimate:
    """Pseudo-periodic kernel as an average of exp(i eps m) over winding numbers.

    A bridge from x to y + m has weight G(y + m - x); m is drawn from those
    weights normalized over the window and the phase is averaged. eps = 0 is
    the periodic kernel, for which the estimator has zero variance.
    """
    for v in (cfg.x, cfg.y):
        if not 0.0 <= v <= 1.0:
            raise IncompatibleDomain("winding estimator lives on the unit interval")
    m = winding_window(cfg, n_sigmas)
    g = free_kernel(cfg.y + m - cfg.x, cfg.T)
    Z = float(np.sum(g))
    # first omitted terms on either side
    edge = free_kernel(cfg.y + np.array([m[0] - 1, m[-1] + 1]) - cfg.x, cfg.T)
    if np.max(edge) > WINDING_TOL * Z:
        raise WindingTruncation(f"window of {len(m)} windings omits weight "
                                f"{np.max(edge) / Z:.1e} > {WINDING_TOL:.0e} of the total")
    q = g / Z
    phase = np.exp(1j * epsilon * m)

    def weights(rng, n):
        return phase[rng.choice(len(m), size=n, p=q)]

    mean, err = _reduce(cfg, weights, workers)
    label = "periodic" if epsilon == 0.0 else f"pseudo:eps={epsilon!r}"
    return McEstimate(Z * mean, Z * err, cfg.n_paths, "mc-winding", label,
                      cfg.x, cfg.y, cfg.T, cfg.n_steps, cfg.seed)
