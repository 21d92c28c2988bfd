"""Monte Carlo first-exit sampling for the diffusion dX = -grad f dt + sqrt(h) dB.

Paths are stepped with explicit Euler; the first step that lands
outside the domain is localized by bisection along the straight
crossing segment.  Every path owns a counter-based RNG stream keyed by
(seed, path_index), so a given configuration reproduces bit-identically
whatever the batch split or thread count.  Two interchangeable stepping
backends exist: a compiled kernel (used when the potential is
polynomial and the domain is an interval or a polynomial implicit
domain) and a NumPy fallback; they return bit-identical samples.

Aggregation stays here: region histograms with Wilson confidence
intervals, bounded-observable estimates, and weighted log-linear decay
fits for exponentially small exit probabilities.
"""

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _pykernels
from .errors import (
    AllCensored,
    OverlappingRegions,
    StartOutsideDomain,
    ZeroCount,
)
from .landscape.geometry import ImplicitDomain, Interval
from .landscape.potentials import Polynomial

try:
    from . import _kernels
except ImportError:  # pragma: no cover - build without the extension
    _kernels = None

HAVE_COMPILED = _kernels is not None

_PATH_BATCH = 4096


# ---------------------------------------------------------------------------
# configuration and samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters; ``dt=None`` selects the step heuristic."""

    h: float
    n_paths: int
    seed: int
    start: object                  # point, or one point per path
    max_time: float
    dt: float = None

    def __post_init__(self):
        if not self.h > 0.0:
            raise ValueError(f"need h > 0, got {self.h}")
        if self.dt is not None and not self.dt > 0.0:
            raise ValueError(f"need dt > 0, got {self.dt}")
        if not self.max_time > 0.0:
            raise ValueError(f"need max_time > 0, got {self.max_time}")
        if int(self.n_paths) != self.n_paths or self.n_paths < 0:
            raise ValueError(f"need n_paths >= 0, got {self.n_paths}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ExitSample:
    path_index: int
    exit_point: tuple
    exit_time: float
    censored: bool

    @property
    def location(self):
        return np.array(self.exit_point)


def _sample_lattice(dom, per_axis=24):
    """Deterministic interior sample points for sup-norm estimates."""
    box = dom.bounding_box
    axes = [np.linspace(lo, hi, per_axis + 2)[1:-1] for lo, hi in box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    pts = pts.reshape(-1, len(axes))
    inside = np.array([dom.contains(p) for p in pts])
    return pts[inside]


def _closure_sample(dom, per_axis):
    # the sup over the closure is often attained on the boundary
    pts = _sample_lattice(dom, per_axis)
    bd = boundary_mesh(dom, n=8 * per_axis)
    return np.vstack([pts, bd]) if pts.size else bd


def gradient_sup(f, dom):
    pts = _closure_sample(dom, 24)
    return float(np.linalg.norm(np.atleast_2d(f.grad_many(pts)),
                                axis=1).max())


def hessian_sup(f, dom):
    best = 0.0
    for p in _closure_sample(dom, 12):
        w = np.linalg.eigvalsh(np.atleast_2d(f.hess(p)))
        best = max(best, float(np.abs(w).max()))
    return best


def resolve_dt(f, dom, cfg):
    """cfg.dt, or the default heuristic min(h,1)/(50 sup|grad f|)."""
    if cfg.dt is not None:
        return float(cfg.dt)
    scale = max(gradient_sup(f, dom), cfg.h / dom.diameter())
    return min(cfg.h, 1.0) / (50.0 * scale)


def _starts_array(start, n_paths, dim):
    arr = np.asarray(start, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        if arr.shape[0] == dim:
            arr = arr.reshape(1, dim)
        elif dim == 1:
            arr = arr.reshape(-1, 1)
        else:
            raise ValueError(
                f"start with shape {arr.shape} fits neither one point of "
                f"dimension {dim} nor a list of 1D points")
    if arr.shape[1] != dim:
        raise ValueError(f"start dimension {arr.shape[1]} != domain {dim}")
    if arr.shape[0] == 1:
        arr = np.broadcast_to(arr, (n_paths, dim)).copy()
    if arr.shape[0] != n_paths:
        raise ValueError(
            f"{arr.shape[0]} start points for {n_paths} paths")
    return arr


def _kernel_spec(f, dom):
    """(tables, dom_spec) when the compiled form applies, else None."""
    if not isinstance(f, Polynomial):
        return None
    if isinstance(dom, Interval):
        return _pykernels.gradient_tables(f), ("interval", dom.a, dom.b)
    if isinstance(dom, ImplicitDomain) and isinstance(dom.g, Polynomial):
        Eg, Cg = _pykernels.implicit_tables(dom.g)
        return _pykernels.gradient_tables(f), ("implicit", Eg, Cg)
    return None


def simulate_exit(f, dom, cfg, backend=None, n_threads=1):
    """First-exit samples of the h-temperature diffusion, one per path.

    ``backend`` forces "compiled" or "numpy"; the default picks the
    compiled kernel whenever it applies.  Thread count never changes
    the output, only the wall time.
    """
    dim = dom.dim
    starts = _starts_array(cfg.start, cfg.n_paths, dim)
    for p in starts[:min(len(starts), 4096)]:
        if not dom.contains(p):
            raise StartOutsideDomain(f"start {tuple(p)} is outside the domain")

    if cfg.n_paths == 0:
        return []

    dt = resolve_dt(f, dom, cfg)
    hs = hessian_sup(f, dom)
    if hs > 0.0 and dt > cfg.h / (10.0 * hs):
        warnings.warn(
            f"dt = {dt:.3g} exceeds the stability guideline "
            f"h/(10 sup|Hess f|) = {cfg.h / (10.0 * hs):.3g}; "
            "exit statistics may carry visible step bias",
            stacklevel=2)
    max_steps = max(1, int(np.floor(cfg.max_time / dt + 1e-9)))
    sqrt_hdt = math.sqrt(cfg.h * dt)

    spec = _kernel_spec(f, dom)
    if backend == "compiled":
        if not HAVE_COMPILED:
            raise ValueError("compiled kernel is not built")
        if spec is None:
            raise ValueError(
                "compiled kernel needs a polynomial potential on an "
                "interval or polynomial implicit domain")
    elif backend not in (None, "numpy"):
        raise ValueError(f"unknown backend {backend!r}")

    if spec is not None:
        tables, dom_spec = spec
        if backend != "numpy" and HAVE_COMPILED:
            runner = _kernels.run_paths_poly
        else:
            runner = _pykernels.run_paths_poly

        def run(lo, hi):
            return runner(tables, dom_spec, starts[lo:hi], dt, sqrt_hdt,
                          max_steps, cfg.seed, lo)
    else:
        def run(lo, hi):
            return _pykernels.run_paths_generic(
                f, dom, starts[lo:hi], dt, sqrt_hdt, max_steps, cfg.seed, lo)

    n = cfg.n_paths
    pts = np.empty((n, dim))
    times = np.empty(n)
    cens = np.empty(n, dtype=bool)
    batches = [(lo, min(lo + _PATH_BATCH, n))
               for lo in range(0, n, _PATH_BATCH)]

    def fill(batch):
        lo, hi = batch
        bp, bt, bc = run(lo, hi)
        pts[lo:hi] = bp
        times[lo:hi] = bt
        cens[lo:hi] = bc

    if n_threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=int(n_threads)) as pool:
            list(pool.map(fill, batches))
    else:
        for batch in batches:
            fill(batch)

    return [ExitSample(path_index=i,
                       exit_point=tuple(float(c) for c in pts[i]),
                       exit_time=float(times[i]),
                       censored=bool(cens[i]))
            for i in range(n)]


# ---------------------------------------------------------------------------
# boundary regions and histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Endpoint:
    """A named interval endpoint (1D region)."""

    x: float
    name: str = ""
    tol: float = 1e-9

    @property
    def label(self):
        return self.name or f"x={self.x:g}"

    def contains(self, p):
        return abs(float(p[0]) - self.x) <= self.tol * max(1.0, abs(self.x))


@dataclass(frozen=True)
class BoundaryBall:
    """Boundary points within euclidean distance beta of a center."""

    center: tuple
    beta: float
    name: str = ""

    @property
    def label(self):
        c = ", ".join(f"{v:g}" for v in self.center)
        return self.name or f"B(({c}), {self.beta:g})"

    def contains(self, p):
        d = np.asarray(p, dtype=float) - np.asarray(self.center, dtype=float)
        return float(np.linalg.norm(d)) < self.beta


@dataclass(frozen=True)
class Arc:
    """Angular arc |angle(p - center) - angle| <= half_width on a circle."""

    center: tuple
    angle: float
    half_width: float
    name: str = ""

    @property
    def label(self):
        return self.name or f"arc({self.angle:g} +- {self.half_width:g})"

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        a = math.atan2(p[1] - self.center[1], p[0] - self.center[0])
        d = (a - self.angle + math.pi) % (2.0 * math.pi) - math.pi
        return abs(d) <= self.half_width


def boundary_mesh(dom, n=4096):
    """Deterministic sample of boundary points (both endpoints in 1D)."""
    if isinstance(dom, Interval):
        return np.array([[dom.a], [dom.b]])
    if dom.dim != 2:
        raise NotImplementedError("boundary meshes exist for 1D and 2D only")
    box = dom.bounding_box
    center = box.mean(axis=1)
    if not dom.contains(center):
        raise ValueError("bounding-box center is outside the domain; "
                         "cannot ray-march the boundary")
    rmax = float(np.linalg.norm(box[:, 1] - box[:, 0]))
    out = np.empty((n, 2))
    for i, ang in enumerate(np.linspace(0.0, 2.0 * math.pi, n,
                                        endpoint=False)):
        u = np.array([math.cos(ang), math.sin(ang)])
        lo, hi = 0.0, rmax
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if dom.contains(center + mid * u):
                lo = mid
            else:
                hi = mid
        out[i] = center + 0.5 * (lo + hi) * u
    return out


def _wilson(k, n, z):
    if n == 0:
        return (0.0, 1.0)
    ph = k / n
    denom = 1.0 + z * z / n
    mid = (ph + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(ph * (1.0 - ph) / n + z * z / (4.0 * n * n)) / denom
    return (max(0.0, mid - half), min(1.0, mid + half))


@dataclass(frozen=True)
class ExitHistogram:
    regions: tuple
    counts: tuple
    leftover: int
    censored: int
    n_paths: int
    intervals: tuple = field(default=())   # Wilson 95% per region

    def __post_init__(self):
        if sum(self.counts) + self.leftover + self.censored != self.n_paths:
            raise ValueError("histogram counts do not sum to n_paths")

    @property
    def n_uncensored(self):
        return self.n_paths - self.censored

    def proportion(self, i):
        return self.counts[i] / self.n_uncensored

    def wilson(self, i, z):
        """Wilson score interval for region i at z standard normal units."""
        return _wilson(self.counts[i], self.n_uncensored, z)

    def to_dict(self):
        return {
            "regions": [r.label for r in self.regions],
            "counts": list(self.counts),
            "leftover": self.leftover,
            "censored": self.censored,
            "n_paths": self.n_paths,
            "wilson95": [list(iv) for iv in self.intervals],
        }


def _check_disjoint(regions, dom):
    if dom is not None:
        mesh = boundary_mesh(dom)
        for p in mesh:
            hits = [i for i, r in enumerate(regions) if r.contains(p)]
            if len(hits) > 1:
                raise OverlappingRegions(
                    f"regions {hits[0]} and {hits[1]} both contain "
                    f"boundary point {tuple(np.round(p, 6))}")
        return
    # no domain to mesh: conservative parameter checks per type pair
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            a, b = regions[i], regions[j]
            if isinstance(a, Endpoint) and isinstance(b, Endpoint):
                lim = a.tol * max(1.0, abs(a.x)) + b.tol * max(1.0, abs(b.x))
                bad = abs(a.x - b.x) <= lim
            elif isinstance(a, BoundaryBall) and isinstance(b, BoundaryBall):
                d = np.linalg.norm(np.asarray(a.center) - np.asarray(b.center))
                bad = d < a.beta + b.beta
            elif isinstance(a, Arc) and isinstance(b, Arc):
                g = (a.angle - b.angle + math.pi) % (2.0 * math.pi) - math.pi
                bad = (abs(g) <= a.half_width + b.half_width
                       and np.allclose(a.center, b.center))
            else:
                bad = False     # mixed types need a domain mesh to decide
            if bad:
                raise OverlappingRegions(
                    f"regions {i} ({a.label}) and {j} ({b.label}) overlap")


def histogram(samples, regions, dom=None):
    """Count exits per disjoint boundary region.

    Censored paths are tallied separately (never assigned to a region);
    uncensored exits outside every region land in ``leftover``.  Region
    disjointness is checked on a boundary mesh when ``dom`` is given,
    otherwise from the region parameters.
    """
    regions = tuple(regions)
    _check_disjoint(regions, dom)
    counts = [0] * len(regions)
    leftover = 0
    censored = 0
    for s in samples:
        if s.censored:
            censored += 1
            continue
        for i, r in enumerate(regions):
            if r.contains(s.exit_point):
                counts[i] += 1
                break
        else:
            leftover += 1
    n = len(samples)
    n_unc = n - censored
    z95 = 1.959963984540054
    intervals = tuple(_wilson(c, n_unc, z95) for c in counts)
    return ExitHistogram(regions=regions, counts=tuple(counts),
                         leftover=leftover, censored=censored,
                         n_paths=n, intervals=intervals)


# ---------------------------------------------------------------------------
# observables and decay fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObservableEstimate:
    mean: float
    stderr: float
    n: int


def estimate_observable(samples, F):
    """Sample mean and standard error of F at the exit point.

    Censored paths are excluded (their bias is bounded separately by
    the censored fraction); if every sample is censored there is no
    estimate at all.
    """
    vals = [float(F(np.asarray(s.exit_point, dtype=float)))
            for s in samples if not s.censored]
    if not vals:
        raise AllCensored(f"all {len(samples)} paths hit the time cutoff")
    arr = np.asarray(vals)
    n = len(arr)
    stderr = float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ObservableEstimate(mean=float(arr.mean()), stderr=stderr, n=n)


@dataclass(frozen=True)
class DecayRateFit:
    slope: float
    stderr: float
    intercept: float
    flagged: tuple = ()    # h values whose zero count became a 1/n bound


def decay_rate_fit(points):
    """Weighted least-squares slope of ln p against 1/h.

    ``points`` holds (h, p, sigma) triples, or (h, p, sigma, n_paths)
    when p may be zero: a zero count is replaced by the one-sided bound
    1/n_paths with unit log-weight and the h is reported in
    ``flagged``.  Exponentially small probabilities give a negative
    slope; polynomially small ones give slopes drifting to zero.
    """
    pts = list(points)
    if len(pts) < 3:
        raise ValueError(f"need at least 3 temperatures, got {len(pts)}")
    xs, ys, sy, flagged = [], [], [], []
    for entry in pts:
        h, p, sigma, *rest = entry
        if not h > 0.0:
            raise ValueError(f"need h > 0, got {h}")
        if p < 0.0 or sigma < 0.0:
            raise ValueError("probabilities and errors must be >= 0")
        if p == 0.0:
            if not rest:
                raise ZeroCount(
                    f"p(h={h}) is zero; pass (h, 0, sigma, n_paths) to use "
                    "the one-sided bound 1/n_paths")
            ys.append(math.log(1.0 / float(rest[0])))
            sy.append(1.0)
            flagged.append(h)
        else:
            ys.append(math.log(p))
            sy.append(sigma / p)
        xs.append(1.0 / h)
    x = np.asarray(xs)
    y = np.asarray(ys)
    w = 1.0 / np.maximum(np.asarray(sy), 1e-12) ** 2
    W = w.sum()
    xb = (w * x).sum() / W
    yb = (w * y).sum() / W
    sxx = (w * (x - xb) ** 2).sum()
    if sxx <= 0.0:
        raise ValueError("temperatures are not distinct")
    slope = float((w * (x - xb) * (y - yb)).sum() / sxx)
    return DecayRateFit(slope=slope,
                        stderr=float(math.sqrt(1.0 / sxx)),
                        intercept=float(yb - slope * xb),
                        flagged=tuple(flagged))


# ---------------------------------------------------------------------------
# sample record files
# ---------------------------------------------------------------------------

def write_samples(samples, path):
    """CSV record per path: index, exit coordinates, time, censored flag."""
    samples = list(samples)
    dim = len(samples[0].exit_point) if samples else 1
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["path_index"] + [f"x{d}" for d in range(dim)]
                    + ["exit_time", "censored"])
        for s in samples:
            wr.writerow([s.path_index] + [repr(c) for c in s.exit_point]
                        + [repr(s.exit_time), int(s.censored)])


def read_samples(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        dim = len(header) - 3
        out = []
        for row in rd:
            out.append(ExitSample(
                path_index=int(row[0]),
                exit_point=tuple(float(v) for v in row[1:1 + dim]),
                exit_time=float(row[1 + dim]),
                censored=bool(int(row[2 + dim]))))
    return out
