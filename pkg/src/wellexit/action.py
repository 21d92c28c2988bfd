"""Path action 1/2 * integral |dγ/dt + grad f(γ)|² dt and its minimization.

Paths are uniform-step polylines; the integrand is sampled at segment
midpoints, so the quadrature vanishes identically on gradient-descent
trajectories and a time-reversed (uphill) trajectory between critical
points costs twice the potential difference.  ``minimize_action`` runs
plain gradient descent with a backtracking line search over the interior
knots (endpoints pinned, straight-segment start) and is meant for
desk-scale corroboration of barrier heights, not production
minimum-action computation.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import LineSearchStalled
from .landscape.geometry import Interval

ARMIJO_C = 1e-4
MAX_BACKTRACKS = 60
# directional-difference step for Hessian-vector products; the O(step^2)
# bias (~1e-12 for the quartic potentials here) is far below the descent
# tolerance and keeps the whole gradient vectorized
_HVP_STEP = 1e-6


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscretePath:
    """Time-ordered knots γ(t_k) at t_k = k·T/N; N >= 2 segments.

    ``domain`` is optional; when present every knot must lie in its
    closure (up to the domain's boundary slack).
    """

    knots: np.ndarray
    total_time: float
    domain: object = None

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if knots.ndim == 1:
            knots = knots[:, None]
        if knots.ndim != 2 or knots.shape[0] < 3:
            raise ValueError("need knots of shape (N + 1, dim) with N >= 2")
        object.__setattr__(self, "knots", knots)
        if not self.total_time > 0.0:
            raise ValueError(f"need total_time > 0, got {self.total_time}")
        if self.domain is not None and not bool(
                np.all(_in_closure(self.domain, knots))):
            raise ValueError("path leaves the domain closure")

    @property
    def n_segments(self):
        return self.knots.shape[0] - 1

    @property
    def dim(self):
        return self.knots.shape[1]

    @property
    def dt(self):
        return self.total_time / self.n_segments

    @property
    def times(self):
        return np.linspace(0.0, self.total_time, self.knots.shape[0])

    def write_csv(self, path):
        """Knot table: one row per knot, time then coordinates."""
        with open(path, "w", newline="") as fh:
            wtr = csv.writer(fh)
            wtr.writerow(["t"] + [f"x{i}" for i in range(self.dim)])
            for t, coords in zip(self.times, self.knots):
                wtr.writerow([repr(float(t))]
                             + [repr(float(c)) for c in coords])


@dataclass(frozen=True)
class ActionValue:
    """Quadrature value with its per-segment breakdown.

    ``value`` equals ``contributions.sum()``; ``stalled`` is set by the
    minimizer when the line search could not find a decreasing step and
    the best iterate so far was returned.
    """

    value: float
    contributions: np.ndarray
    stalled: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "contributions",
            np.asarray(self.contributions, dtype=float))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def action(f, path):
    """Midpoint-rule quadrature of 1/2 * integral |dγ/dt + grad f|² dt."""
    if path.dim != f.dim:
        raise ValueError(f"path dim {path.dim} != potential dim {f.dim}")
    contrib = _contributions(f, path.knots, path.total_time)
    return ActionValue(value=float(contrib.sum()), contributions=contrib)


def _contributions(f, knots, total_time):
    dt = total_time / (knots.shape[0] - 1)
    resid = (np.diff(knots, axis=0) / dt
             + f.grad_many(0.5 * (knots[:-1] + knots[1:])))
    return 0.5 * dt * np.einsum("ij,ij->i", resid, resid)


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------

def minimize_action(f, x, y, T, N, iterations=500, domain=None):
    """Descend the quadrature over interior knots from the straight path.

    Endpoints stay pinned at ``x`` and ``y``.  The accepted objective is
    non-increasing; each accepted step doubles the remembered step size
    and each rejection halves it (Armijo test).  When ``domain`` is
    given, knots that leave its closure are pulled back toward their
    previous feasible position after every trial step.  A stalled line
    search returns the best path so far with ``stalled`` set instead of
    raising.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (f.dim,) or y.shape != (f.dim,):
        raise ValueError("endpoints must be single points of f's dimension")
    if int(N) != N or N < 2:
        raise ValueError(f"need N >= 2, got {N}")
    if not T > 0.0:
        raise ValueError(f"need T > 0, got {T}")
    dt = T / N

    frac = np.linspace(0.0, 1.0, N + 1)[:, None]
    knots = (1.0 - frac) * x + frac * y
    if domain is not None:
        # straight start can leave a non-convex domain; pull toward x
        _pull_inside(domain, knots, np.broadcast_to(x, knots.shape))

    value = float(_contributions(f, knots, T).sum())
    grad = _interior_gradient(f, knots, dt)
    step = 1.0
    stalled = False
    for _ in range(int(iterations)):
        grad_sq = float(np.sum(grad * grad))
        if grad_sq == 0.0:
            break
        try:
            knots, value, step = _armijo_step(
                f, knots, grad, value, grad_sq, step, T, domain)
        except LineSearchStalled:
            stalled = True
            break
        grad = _interior_gradient(f, knots, dt)

    contrib = _contributions(f, knots, T)
    return (DiscretePath(knots, T, domain=domain),
            ActionValue(float(contrib.sum()), contrib, stalled=stalled))


def _armijo_step(f, knots, grad, value, grad_sq, step, T, domain):
    """One accepted descent step, or LineSearchStalled."""
    for _ in range(MAX_BACKTRACKS):
        trial = knots - step * grad
        if domain is not None:
            _pull_inside(domain, trial, knots)
        trial_value = float(_contributions(f, trial, T).sum())
        if trial_value <= value - ARMIJO_C * step * grad_sq:
            return trial, trial_value, 2.0 * step
        step *= 0.5
    raise LineSearchStalled(
        f"no decreasing step after {MAX_BACKTRACKS} halvings")


def _interior_gradient(f, knots, dt):
    """Exact quadrature gradient; zero rows at the pinned endpoints.

    Knot k couples to segments k-1 and k through the residuals
    r_i = Δγ_i/dt + grad f(m_i):

        dS/dγ_k = (r_{k-1} - r_k) + dt/2 · (H(m_{k-1}) r_{k-1}
                                            + H(m_k) r_k)

    with the Hessian-vector products formed by centred differencing of
    grad f along each residual direction.
    """
    mid = 0.5 * (knots[:-1] + knots[1:])
    resid = np.diff(knots, axis=0) / dt + f.grad_many(mid)
    norms = np.linalg.norm(resid, axis=1, keepdims=True)
    unit = np.divide(resid, norms, out=np.zeros_like(resid),
                     where=norms > 0.0)
    hess_r = norms * (f.grad_many(mid + _HVP_STEP * unit)
                      - f.grad_many(mid - _HVP_STEP * unit)) / (2 * _HVP_STEP)
    grad = np.zeros_like(knots)
    grad[1:-1] = (resid[:-1] - resid[1:]
                  + 0.5 * dt * (hess_r[:-1] + hess_r[1:]))
    return grad


# ---------------------------------------------------------------------------
# domain handling
# ---------------------------------------------------------------------------

def _in_closure(dom, pts):
    """Vectorized test for membership in the domain closure (eps slack)."""
    pts = np.asarray(pts, dtype=float)
    eps = dom.eps()
    if isinstance(dom, Interval):
        x = pts[:, 0]
        return (x >= dom.a - eps) & (x <= dom.b + eps)
    return dom.g.eval_many(pts) <= eps


def _pull_inside(dom, trial, prev):
    """Scale offending knots back toward their previous feasible position."""
    bad = np.flatnonzero(~_in_closure(dom, trial))
    for k in bad:
        move = trial[k] - prev[k]
        lo, hi = 0.0, 1.0          # feasible / infeasible step fractions
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if _in_closure(dom, (prev[k] + mid * move)[None, :])[0]:
                lo = mid
            else:
                hi = mid
        trial[k] = prev[k] + lo * move
