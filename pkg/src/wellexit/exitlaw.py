"""Limiting exit-point law for noisy gradient descent.

For dX = -grad f(X) dt + sqrt(h) dW killed on leaving Omega, the exit
location concentrates (h -> 0) on finitely many boundary points, with
weights proportional to

    dnf(z) / sqrt(det Hess (f|bdry)(z))

over the admissible points z of the starting well.  Which points are
admissible -- and how fast the law converges -- depends on the landscape
around the well; `theoretical_weights` sorts a LandscapeReport into one
of four regimes:

    deepest_well   start well is the unique deepest one, its boundary
                   contacts all attain the boundary minimum, and no
                   separating saddle sits at its level:  remainder O(h).
    isolated_well  the well's sublevel boundary carries no separating
                   saddle, so its closure is a full connected component
                   of {f <= level}:  remainder O(h).
    well_group     several wells glued at a common level; the law is the
                   one of the strictly deepest member, valid for starts
                   in its basin:  remainder O(h^{1/4}).
    deterministic  the gradient flow from the start leaves Omega in
                   finite time; the exit is a single point.

Anything else raises RegimeUnsupported with per-check diagnostics.  The
classical 1D scale-function probability (exact at every h, not just in
the limit) is provided as an independent oracle.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from . import morse
from .errors import RegimeUnsupported, StartOutsideDomain
from .landscape.geometry import boundary_normal_derivative, project_to_boundary
from .morse import GeneralizedSaddle, flow

REGIME_DEEPEST = "deepest_well"
REGIME_CLEAN = "isolated_well"
REGIME_GROUP = "well_group"
REGIME_DETERMINISTIC = "deterministic"

ORDER_H = "O(h)"
ORDER_H14 = "O(h^{1/4})"
ORDER_EXP = "O(e^{-c/h})"


@dataclass(frozen=True)
class ExitLaw:
    support: tuple                 # GeneralizedSaddle records, sorted by point
    weights: tuple                 # same order, each in (0,1], sum 1
    regime: str
    remainder_order: str

    @property
    def points(self):
        return tuple(z.point for z in self.support)

    def weight_at(self, point, tol=1e-6):
        """Weight of the support point nearest to `point` (within tol)."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        dists = [float(np.linalg.norm(z.location - p)) for z in self.support]
        i = int(np.argmin(dists))
        if dists[i] > tol:
            raise KeyError(f"{point} is not a support point")
        return self.weights[i]

    def to_dict(self):
        return {
            "regime": self.regime,
            "remainder_order": self.remainder_order,
            "support": [
                {"location": list(z.point), "value": z.value,
                 "normal_derivative": z.normal_derivative,
                 "tangential_hessian_det": z.tangential_hessian_det}
                for z in self.support],
            "weights": list(self.weights),
        }


def _make_law(support, regime, order):
    """Normalize the raw weights over `support` and package the law."""
    raw = []
    for z in support:
        if not (z.normal_derivative > 0.0):
            raise RegimeUnsupported(
                f"support point {z.point} has non-positive outward "
                "normal derivative",
                {"support": f"dnf({z.point}) = {z.normal_derivative:.6g}"})
        if not (z.tangential_hessian_det > 0.0):
            raise RegimeUnsupported(
                f"support point {z.point} is tangentially degenerate",
                {"support": f"det({z.point}) = {z.tangential_hessian_det:.6g}"})
        raw.append(z.normal_derivative / math.sqrt(z.tangential_hessian_det))
    order_idx = sorted(range(len(support)), key=lambda i: support[i].point)
    support = tuple(support[i] for i in order_idx)
    raw = [raw[i] for i in order_idx]
    total = math.fsum(raw)
    weights = tuple(r / total for r in raw)
    assert abs(math.fsum(weights) - 1.0) <= 1e-12
    return ExitLaw(support=support, weights=weights,
                   regime=regime, remainder_order=order)


# ---------------------------------------------------------------------------
# regime analysis
# ---------------------------------------------------------------------------

def _match_support(report, contacts):
    """Map each boundary contact to its GeneralizedSaddle record."""
    matched = []
    for z in contacts:
        zp = np.asarray(z, dtype=float)
        tol = 1e-5 * max(1.0, float(np.linalg.norm(zp)))
        best, best_d = None, np.inf
        for g in report.generalized_saddles:
            d = float(np.linalg.norm(g.location - zp))
            if d < best_d:
                best, best_d = g, d
        if best is None or best_d > tol:
            raise RegimeUnsupported(
                f"boundary contact {z} is not an admissible exit point "
                "(no matching boundary minimum with positive normal "
                "derivative)",
                {"contact": f"{z}: nearest admissible point at distance "
                            f"{best_d:.3g}"})
        matched.append(best)
    if len({id(g) for g in matched}) != len(matched):
        raise RegimeUnsupported(
            "two boundary contacts map to the same boundary minimum",
            {"contacts": str(contacts)})
    return matched


def _level_obstructions(report, well, grid, merge_tol, tie_tol):
    """Critical points sitting at the well's level on its closure.

    Returns (separating, indeterminate, other) saddle-like obstructions.
    Separating and unclassified saddles are compared at `merge_tol` (the
    grid can only place them within one cell of energy), remaining
    critical points at the exact-tie scale `tie_tol`.  Without a grid
    the adjacency test degrades to value-only, which can only
    over-report (a conservative refusal, never a false certificate).
    """
    if grid is not None:
        node_arr = np.zeros(grid.n_interior, dtype=bool)
        node_arr[list(well.node_set)] = True
        coords = grid.interior_coords[node_arr]
        radius2 = (2.0 * float(grid.spacing.max())) ** 2

        def adjacent(point):
            d2 = ((coords - point) ** 2).sum(axis=1)
            return bool(d2.min() <= radius2)
    else:
        def adjacent(point):
            return True

    def at_level(value, tol):
        return abs(value - well.level) <= tol

    members = set(well.member_minima)
    sep = [s for s in report.separating_saddles
           if at_level(s.level, merge_tol) and adjacent(s.point.point)]
    sep_cps = {s.point for s in sep}
    indet = [c for c, _why in report.indeterminate_saddles
             if at_level(c.value, merge_tol) and adjacent(c.point)]
    other = [c for c in report.critical_points
             if c.kind == morse.INTERIOR_KIND and c not in members
             and c not in sep_cps and at_level(c.value, tie_tol)
             and adjacent(c.point)]
    return sep, indet, other


def _split_group(report, well, f, grid, level_tol):
    """Partition a glued well into its sub-components just below level.

    Returns (deepest_members, deepest_support): the member minima of the
    strictly deepest sub-component and the boundary contacts attached to
    it.  Raises RegimeUnsupported when the structure cannot be resolved.
    """
    dom = grid.dom
    vals = morse._interior_values(f, grid)
    labels = morse._sublevel_labels(grid, vals, well.level - level_tol)

    side_of = {}
    for m in well.member_minima:
        lab = int(labels[grid.nearest_interior(m.point)])
        if lab < 0:
            raise RegimeUnsupported(
                "grid too coarse to separate the glued wells "
                f"(member minimum at {m.location} sits within the level "
                "tolerance of the common barrier)",
                {"group": f"member {m.location} above split level"})
        side_of[m] = lab
    sides = sorted({lab for lab in side_of.values()})
    if len(sides) < 2:
        raise RegimeUnsupported(
            "a separating saddle sits at the well's level but the region "
            "on its far side contains no well minimum at that level; no "
            "covered regime applies there",
            {"group": "level component is not a union of wells"})

    depth = {lab: min(m.value for m, l in side_of.items() if l == lab)
             for lab in sides}
    ranked = sorted(sides, key=lambda lab: depth[lab])
    scale = max(1.0, max(abs(m.value) for m in well.member_minima))
    if depth[ranked[1]] - depth[ranked[0]] <= 1e-9 * scale:
        raise RegimeUnsupported(
            "the glued wells are equally deep; no single sub-well "
            "dominates the exit law",
            {"group": f"tied depths {depth[ranked[0]]:.6g} and "
                      f"{depth[ranked[1]]:.6g}"})
    deepest = ranked[0]

    # Attach each boundary contact to a side by releasing the descent
    # flow from just inside it.
    support = _match_support(report, well.boundary_contacts)
    eps_in = 0.5 * float(grid.spacing.min())
    deepest_support = []
    for g in support:
        z = g.location
        start = z - eps_in * dom.normal(z)
        fr = flow(f, dom, start)
        if fr.converged:
            lab = int(labels[grid.nearest_interior(fr.critical_point)])
        else:
            probe = fr.exit_point - 2.0 * float(grid.spacing.max()) * \
                dom.normal(fr.exit_point)
            lab = int(labels[grid.nearest_interior(probe)])
        if lab < 0:
            raise RegimeUnsupported(
                f"cannot attach boundary contact {g.point} to a sub-well",
                {"group": f"descent from {g.point} lands above the "
                          "split level"})
        if lab == deepest:
            deepest_support.append(g)
    if not deepest_support:
        raise RegimeUnsupported(
            "the deepest glued sub-well does not touch the boundary",
            {"group": "no boundary contact on the deepest side"})
    members = tuple(m for m, lab in side_of.items() if lab == deepest)
    return members, deepest_support


def _analyze_regime(report, well, f=None, grid=None, level_tolerance=None):
    """Regime, support and remainder order for exits from `well`.

    Returns (regime, support, order, deepest_members) where
    deepest_members lists the minima whose basins the law covers (None
    means every member of the well).
    """
    v = report.assumption_verdicts
    a0 = v.get("A0")
    if a0 is not None and a0.status == "fail":
        raise RegimeUnsupported(
            f"landscape structure check failed: {a0.reason}",
            {"A0": a0.reason})

    if not well.boundary_contacts:
        raise RegimeUnsupported(
            "the well's closure does not reach the boundary; exits pass "
            "through neighboring components not covered by any regime",
            {"contacts": "empty"})

    tie_tol = 1e-6 * max(1.0, abs(well.level))
    if level_tolerance is not None:
        merge_tol = tie_tol = level_tolerance
    elif f is not None and grid is not None:
        merge_tol = morse.grid_energy_tolerance(f, grid) + 1e-9
    elif np.isfinite(report.energy_tolerance):
        merge_tol = report.energy_tolerance + 1e-9
    else:
        merge_tol = tie_tol

    sep, indet, other = _level_obstructions(report, well, grid,
                                            merge_tol, tie_tol)
    if indet:
        raise RegimeUnsupported(
            "an unclassified saddle sits at the well's level; the well "
            "structure there cannot be certified",
            {"saddles": f"unclassified at {[c.location for c in indet]}"})

    if sep:
        if f is None or grid is None:
            raise RegimeUnsupported(
                "wells glued at a common level: resolving the group "
                "needs the potential and the grid",
                {"group": "pass f= and grid= to resolve"})
        members, support = _split_group(report, well, f, grid, merge_tol)
        return REGIME_GROUP, support, ORDER_H14, members

    support = _match_support(report, well.boundary_contacts)
    if (well.id == report.c_max_id and v.get("A1") and v.get("A2")
            and v.get("A3")):
        return REGIME_DEEPEST, support, ORDER_H, None
    if not other:
        # closure is a clean component of the level sublevel set
        return REGIME_CLEAN, support, ORDER_H, None
    raise RegimeUnsupported(
        "critical points sit at the well's level on its closure",
        {"saddles": f"critical values at the well level: "
                    f"{[c.location for c in other]}"})


def theoretical_weights(report, well, f=None, grid=None,
                        level_tolerance=None):
    """Limiting exit law for paths started in `well`.

    The weight of each admissible boundary point z is
    dnf(z)/sqrt(det Hess (f|bdry)(z)), normalized over the support set
    the regime dictates.  `f` and `grid` are only needed to resolve
    wells glued at a common level (the grid merges those into a single
    well); for such a well the returned law covers starts in the basin
    of the deepest glued component.

    Raises RegimeUnsupported -- with diagnostics saying which check
    failed -- when no covered regime applies.
    """
    regime, support, order, _members = _analyze_regime(
        report, well, f=f, grid=grid, level_tolerance=level_tolerance)
    return _make_law(support, regime, order)


# ---------------------------------------------------------------------------
# start-point dispatch
# ---------------------------------------------------------------------------

def predicted_concentration_set(f, dom, report, start, grid=None):
    """Exit law for paths started at `start` (a point of Omega).

    If the plain gradient flow from `start` leaves the domain, the exit
    concentrates at the flow's own exit point (weight 1).  Otherwise the
    flow settles into a well and the well's law applies; for wells glued
    at a common level the start must descend into the deepest component.
    """
    x = np.atleast_1d(np.asarray(start, dtype=float))
    if not dom.contains(x):
        raise StartOutsideDomain(f"start {start} is outside the domain")

    fr = flow(f, dom, x)
    if fr.exited:
        y = project_to_boundary(dom, fr.exit_point)
        dn = boundary_normal_derivative(f, dom, y)
        scale = max(1.0, abs(report.min_boundary_value))
        z = GeneralizedSaddle(
            point=tuple(float(c) for c in y),
            value=float(f.eval(y)),
            normal_derivative=float(dn),
            tangential_hessian_det=float("nan"),
            is_global_boundary_min=bool(
                f.eval(y) <= report.min_boundary_value + 1e-9 * scale),
            on_c_max=False)
        return ExitLaw(support=(z,), weights=(1.0,),
                       regime=REGIME_DETERMINISTIC,
                       remainder_order=ORDER_EXP)

    terminal = fr.critical_point
    landed = None
    for w in report.wells:
        for m in w.member_minima:
            tol = 1e-4 * max(1.0, float(np.linalg.norm(m.point)))
            if float(np.linalg.norm(m.point - terminal)) <= tol:
                landed = (w, m)
                break
        if landed:
            break
    if landed is None:
        raise RegimeUnsupported(
            f"the descent flow from {start} settles at {tuple(terminal)}, "
            "which is not a well minimum (start lies on a stable manifold "
            "of a saddle, or the landscape analysis missed a well)",
            {"flow": f"terminal {tuple(terminal)}"})

    w, m = landed
    regime, support, order, members = _analyze_regime(
        report, w, f=f, grid=grid)
    if members is not None and m not in members:
        raise RegimeUnsupported(
            f"start descends into the minimum at {m.location}, which is "
            "not in the deepest component of its glued well group; no "
            "covered regime applies there",
            {"group": f"landed {m.location}, deepest side minima "
                      f"{[q.location for q in members]}"})
    return _make_law(support, regime, order)


# ---------------------------------------------------------------------------
# exact 1D scale-function oracle
# ---------------------------------------------------------------------------

def exact_exit_probability_1d(f, interval, x, h, rel_tol=1e-12, limit=800):
    """P[exit through a | X_0 = x] for the interval (a, b), exact in h.

    The scale function s(y) = int e^{2f/h} makes the exit probability
    (s(b) - s(x)) / (s(b) - s(a)); both integrals are evaluated by
    adaptive quadrature on the rescaled integrand e^{2(f - max f)/h}
    (the common factor cancels in the ratio and the rescaling is what
    keeps e^{2f/h} finite at small h).
    """
    a, b = float(interval[0]), float(interval[1])
    x = float(np.atleast_1d(np.asarray(x, dtype=float))[0])
    if not (a < x < b):
        raise ValueError(f"need a < x < b, got ({a}, {x}, {b})")
    if not h > 0:
        raise ValueError("h must be positive")

    def fx(t):
        return float(f.eval(np.array([t])))

    ts = np.linspace(a, b, 2001)
    vs = f.eval_many(ts[:, None])
    i = int(np.argmax(vs))
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
    shift = float(vs[i])
    if hi > lo:
        r = minimize_scalar(lambda t: -fx(t), bounds=(lo, hi),
                            method="bounded",
                            options={"xatol": 1e-12})
        shift = max(shift, float(-r.fun))

    # local maxima of the scan become quadrature breakpoints: the
    # integrand is a spike at each of them when h is small (strict on
    # the left so plateaus contribute no breakpoints)
    peaks = [float(ts[j]) for j in range(1, len(ts) - 1)
             if vs[j] > vs[j - 1] and vs[j] >= vs[j + 1]]

    def w(t):
        return math.exp(2.0 * (fx(t) - shift) / h)

    def segment(lo, hi):
        margin = 1e-12 * (b - a)
        pts = [p for p in peaks if lo + margin < p < hi - margin]
        val, err = quad(w, lo, hi, points=pts or None, epsabs=0.0,
                        epsrel=rel_tol, limit=limit)
        if val > 0.0 and err > 1e-10 * val:
            raise RuntimeError(
                f"quadrature error {err:.3g} exceeds the requested "
                f"relative accuracy on [{lo}, {hi}]")
        return val

    upper = segment(x, b)
    lower = segment(a, x)
    return upper / (lower + upper)


class Oracle1D:
    """Configured 1D exit-probability oracle for a fixed interval."""

    def __init__(self, interval, rel_tol=1e-12, limit=800):
        a, b = float(interval[0]), float(interval[1])
        if not b > a:
            raise ValueError("empty interval")
        self.interval = (a, b)
        self.rel_tol = float(rel_tol)
        self.limit = int(limit)

    def exit_probability(self, f, x, h):
        """Probability of exiting through the left endpoint."""
        return exact_exit_probability_1d(f, self.interval, x, h,
                                         rel_tol=self.rel_tol,
                                         limit=self.limit)

    def __repr__(self):
        return f"Oracle1D({self.interval!r}, rel_tol={self.rel_tol})"
