"""Landscape analysis: critical points, barriers, wells, saddles.

Everything is organized around the barrier height

    H(x) = inf over paths from x to the boundary of (max f along the path)

computed on a grid graph, and the sublevel-set components it induces.  The
structural checks A0..A4 gate which exit-law results apply:

    A0  f is Morse on the closure, no critical point on the boundary,
        and the boundary restriction is Morse where the outward normal
        derivative is positive;
    A1  there is a unique deepest well;
    A2  the deepest well's closure touches the boundary;
    A3  it touches it only inside the global boundary minimum set;
    A4  no separating saddle sits on the deepest well's boundary.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (MaxStepsExceeded, NotOnBoundary, NotTangentiallyCritical,
                     SeedAboveLevel, StartOutsideDomain)
from .landscape.geometry import (Interval, project_to_boundary,
                                 tangential_hessian, tangential_hessian_det)

INTERIOR_KIND = "interior"
BOUNDARY_KIND = "boundary_tangential"


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    location: tuple
    value: float
    index: int
    kind: str                      # "interior" | "boundary_tangential"
    degenerate: bool = False
    min_abs_eigenvalue: float = 0.0

    @property
    def point(self):
        return np.array(self.location)


@dataclass(frozen=True)
class Well:
    id: int
    member_minima: tuple           # CriticalPoints, index 0, interior
    level: float                   # barrier height of its minima
    node_set: frozenset            # compact interior node ids
    boundary_contacts: tuple       # points on the domain boundary
    depth: float                   # level - min f over the well


@dataclass(frozen=True)
class SeparatingSaddle:
    point: CriticalPoint
    level: float
    separated_pair: tuple          # component labels below level - eps


@dataclass(frozen=True)
class GeneralizedSaddle:
    point: tuple
    value: float
    normal_derivative: float
    tangential_hessian_det: float
    is_global_boundary_min: bool
    on_c_max: bool = False

    @property
    def location(self):
        return np.array(self.point)


@dataclass(frozen=True)
class Verdict:
    status: str                    # "pass" | "fail" | "indeterminate"
    reason: str

    def __bool__(self):
        return self.status == "pass"


@dataclass(frozen=True)
class FlowResult:
    terminal: str                  # "converged" | "exited" | "stopped"
    point: tuple
    exit_time: float
    arc_length: float
    steps: int

    @property
    def converged(self):
        return self.terminal == "converged"

    @property
    def exited(self):
        return self.terminal == "exited"

    @property
    def critical_point(self):
        return np.array(self.point) if self.converged else None

    @property
    def exit_point(self):
        return np.array(self.point) if self.exited else None


@dataclass
class LandscapeReport:
    critical_points: list
    wells: list
    c_max_id: int                  # -1 when A1 fails
    separating_saddles: list
    indeterminate_saddles: list
    generalized_saddles: list
    assumption_verdicts: dict
    min_boundary_value: float = field(default=np.nan)
    energy_tolerance: float = field(default=np.nan)

    @property
    def c_max(self):
        for w in self.wells:
            if w.id == self.c_max_id:
                return w
        return None

    @property
    def k1_boundary(self):
        return sum(1 for z in self.generalized_saddles if z.is_global_boundary_min)

    @property
    def k1_c_max(self):
        return sum(1 for z in self.generalized_saddles if z.on_c_max)

    def to_dict(self):
        """JSON-ready structured report (node sets reported as counts)."""
        return {
            "critical_points": [
                {"location": list(c.location), "value": c.value,
                 "index": c.index, "kind": c.kind, "degenerate": c.degenerate}
                for c in self.critical_points],
            "wells": [
                {"id": w.id,
                 "member_minima": [list(m.location) for m in w.member_minima],
                 "level": w.level, "depth": w.depth,
                 "boundary_contacts": [list(b) for b in w.boundary_contacts],
                 "node_count": len(w.node_set)}
                for w in self.wells],
            "c_max_id": self.c_max_id,
            "separating_saddles": [
                {"location": list(s.point.location), "level": s.level,
                 "separated_pair": list(s.separated_pair)}
                for s in self.separating_saddles],
            "indeterminate_saddles": [
                {"location": list(c.location), "reason": why}
                for c, why in self.indeterminate_saddles],
            "generalized_saddles": [
                {"location": list(z.point), "value": z.value,
                 "normal_derivative": z.normal_derivative,
                 "tangential_hessian_det": z.tangential_hessian_det,
                 "is_global_boundary_min": z.is_global_boundary_min,
                 "on_c_max": z.on_c_max}
                for z in self.generalized_saddles],
            "assumption_verdicts": {
                k: {"status": v.status, "reason": v.reason}
                for k, v in self.assumption_verdicts.items()},
            "min_boundary_value": self.min_boundary_value,
            "energy_tolerance": self.energy_tolerance,
            "k1_boundary": self.k1_boundary,
            "k1_c_max": self.k1_c_max,
        }


# ---------------------------------------------------------------------------
# scales and tolerances
# ---------------------------------------------------------------------------

def _interior_values(f, grid):
    return f.eval_many(grid.interior_coords)


def gradient_scale(f, grid):
    """max |grad f| over interior nodes; the grid Lipschitz estimate."""
    g = f.grad_many(grid.interior_coords)
    return float(np.sqrt((g * g).sum(axis=1)).max())


def grid_energy_tolerance(f, grid):
    """Energy resolvable by one grid cell: Lip(f) * max spacing."""
    return gradient_scale(f, grid) * float(grid.spacing.max())


def _tol_crit(f, grid):
    return 1e-6 * max(1.0, gradient_scale(f, grid))


# ---------------------------------------------------------------------------
# critical points
# ---------------------------------------------------------------------------

def _newton_interior(f, x0, tol, max_iter=60, step_cap=None):
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        g = f.grad(x)
        gn = np.linalg.norm(g)
        if gn < tol:
            return x
        try:
            step = np.linalg.solve(f.hess(x), g)
        except np.linalg.LinAlgError:
            return None
        if step_cap is not None:
            sn = np.linalg.norm(step)
            if sn > step_cap:
                step *= step_cap / sn
        x = x - step
    return x if np.linalg.norm(f.grad(x)) < tol else None


def _newton_boundary(f, dom, x0, tol, max_iter=60):
    """Constrained critical point of f|_{g=0}: solve grad f = lam grad g, g=0."""
    if isinstance(dom, Interval):
        return np.array(x0, dtype=float)
    z = np.array(x0, dtype=float)
    gg = dom.g.grad(z)
    lam = float(f.grad(z) @ gg) / float(gg @ gg)
    d = z.size
    for _ in range(max_iter):
        gg = dom.g.grad(z)
        res = np.concatenate([f.grad(z) - lam * gg, [dom.g.eval(z)]])
        if np.linalg.norm(res[:-1]) < tol and abs(res[-1]) < tol * 1e-3 + 1e-12:
            return z
        J = np.zeros((d + 1, d + 1))
        J[:d, :d] = f.hess(z) - lam * dom.g.hess(z)
        J[:d, d] = -gg
        J[d, :d] = gg
        try:
            delta = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError:
            return None
        z = z + delta[:d]
        lam += delta[d]
    return None


def _lattice_local_minima(field_vals, multis, axis_shape):
    """Ids whose value is <= all existing lattice neighbors (L-inf ring 1)."""
    index = {tuple(m): i for i, m in enumerate(map(tuple, multis))}
    out = []
    d = multis.shape[1]
    offsets = [o for o in np.ndindex(*([3] * d)) if any(v != 1 for v in o)]
    for i, m in enumerate(multis):
        v = field_vals[i]
        best = True
        for o in offsets:
            nb = tuple(m[k] + o[k] - 1 for k in range(d))
            j = index.get(nb)
            if j is not None and field_vals[j] < v:
                best = False
                break
        if best:
            out.append(i)
    return out


def find_critical_points(f, dom, grid, tol_crit=None, tol_degenerate=None):
    """Newton-polished critical points seeded at lattice minima of |grad f|,
    plus boundary-tangential critical points on the boundary layer."""
    tol = tol_crit if tol_crit is not None else _tol_crit(f, grid)
    sp = float(grid.spacing.max())
    tol_merge = sp / 2.0

    g = f.grad_many(grid.interior_coords)
    gn = np.sqrt((g * g).sum(axis=1))
    seeds = _lattice_local_minima(gn, grid.interior_multi, grid.shape)

    found = []
    for i in seeds:
        x = _newton_interior(f, grid.interior_coords[i], tol, step_cap=4 * sp)
        if x is None:
            continue
        inside = dom.contains(x)
        near_bd = dom.boundary_distance(x) <= max(dom.eps(), 1e-9)
        if not inside and not near_bd:
            continue
        found.append(x)

    merged = []
    for x in found:
        if all(np.linalg.norm(x - y) > tol_merge for y in merged):
            merged.append(x)

    points = []
    for x in merged:
        h = f.hess(x)
        eig = np.linalg.eigvalsh(h)
        scale = max(1.0, float(np.abs(eig).max()))
        tdeg = tol_degenerate if tol_degenerate is not None else 1e-8 * scale
        mineig = float(np.abs(eig).min())
        points.append(CriticalPoint(
            location=tuple(float(v) for v in x),
            value=f.eval(x),
            index=int((eig < 0).sum()),
            kind=INTERIOR_KIND,
            degenerate=mineig < tdeg,
            min_abs_eigenvalue=mineig,
        ))

    points.extend(_boundary_critical_points(f, dom, grid, tol, tol_degenerate))
    # canonical order: results must not depend on seed enumeration order
    points.sort(key=lambda c: (c.kind, c.location))
    return points


def _boundary_critical_points(f, dom, grid, tol, tol_degenerate):
    if isinstance(dom, Interval):
        out = []
        for z in (dom.a, dom.b):
            out.append(CriticalPoint(
                location=(float(z),), value=f.eval([z]), index=0,
                kind=BOUNDARY_KIND, degenerate=False,
                min_abs_eigenvalue=np.inf))
        return out

    # project boundary nodes onto {g=0}; seed where |tangential grad| is
    # locally minimal within the boundary layer (L-inf lattice adjacency)
    proj = np.array([project_to_boundary(dom, z) for z in grid.boundary_coords])
    tg = np.empty(len(proj))
    for i, z in enumerate(proj):
        gg = dom.g.grad(z)
        n = gg / np.linalg.norm(gg)
        gf = f.grad(z)
        tg[i] = np.linalg.norm(gf - (gf @ n) * n)
    seeds = _lattice_local_minima(tg, grid.boundary_multi, grid.shape)

    sp = float(grid.spacing.max())
    merged = []
    for i in seeds:
        z = _newton_boundary(f, dom, proj[i], tol)
        if z is None:
            continue
        z = project_to_boundary(dom, z)
        if all(np.linalg.norm(z - y) > sp / 2.0 for y in merged):
            merged.append(z)

    out = []
    for z in merged:
        try:
            th = tangential_hessian(f, dom, z, tol_crit=tol)
        except (NotOnBoundary, NotTangentiallyCritical):
            continue
        eig = np.linalg.eigvalsh(th) if th.size else np.array([])
        if th.size:
            scale = max(1.0, float(np.abs(eig).max()))
            tdeg = tol_degenerate if tol_degenerate is not None else 1e-8 * scale
            mineig = float(np.abs(eig).min())
            degenerate = mineig < tdeg
            index = int((eig < 0).sum())
        else:
            mineig, degenerate, index = np.inf, False, 0
        out.append(CriticalPoint(
            location=tuple(float(v) for v in z), value=f.eval(z),
            index=index, kind=BOUNDARY_KIND, degenerate=degenerate,
            min_abs_eigenvalue=mineig))
    return out


# ---------------------------------------------------------------------------
# barrier height and sublevel components
# ---------------------------------------------------------------------------

def _adjacency(grid):
    def build():
        edges = grid.all_edges()
        n = grid.n_interior + grid.n_boundary
        data = np.ones(2 * len(edges), dtype=np.int8)
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        return csr_matrix((data, (rows, cols)), shape=(n, n))
    return grid._cached("csr_adj", build)


def barrier_height(f, grid, x, values=None):
    """Minimax path value from the node nearest x to the boundary layer."""
    vals = values if values is not None else grid.node_value_array(f)
    start = grid.nearest_interior(x)
    adj = _adjacency(grid)
    n_int = grid.n_interior
    dist = np.full(len(vals), np.inf)
    dist[start] = vals[start]
    heap = [(vals[start], start)]
    indptr, indices = adj.indptr, adj.indices
    while heap:
        c, u = heapq.heappop(heap)
        if c > dist[u]:
            continue
        if u >= n_int:
            return float(c)
        for v in indices[indptr[u]:indptr[u + 1]]:
            nc = max(c, vals[u], vals[v])
            if nc < dist[v]:
                dist[v] = nc
                heapq.heappush(heap, (nc, v))
    return np.inf


def sublevel_component(f, grid, level, seed, values=None):
    """Interior node ids of the {f < level} component containing seed."""
    vals = values if values is not None else _interior_values(f, grid)
    vals = vals[:grid.n_interior]
    start = grid.nearest_interior(seed)
    if not vals[start] < level:
        raise SeedAboveLevel(
            f"f(nearest node)={vals[start]:.6g} is not below level {level:.6g}")
    labels = _sublevel_labels(grid, vals, level)
    return np.flatnonzero(labels == labels[start])


def _sublevel_labels(grid, vals, level):
    """Component labels over {f < level} interior nodes; -1 above level."""
    mask = vals < level
    edges = grid.interior_edges()
    keep = mask[edges[:, 0]] & mask[edges[:, 1]]
    e = edges[keep]
    n = grid.n_interior
    adj = csr_matrix((np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])),
                     shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    labels = labels.copy()
    labels[~mask] = -1
    # renumber so labels are stable (ordered by first node id)
    out = np.full(n, -1, dtype=np.int64)
    next_id = 0
    seen = {}
    for i in np.flatnonzero(mask):
        l = labels[i]
        if l not in seen:
            seen[l] = next_id
            next_id += 1
        out[i] = seen[l]
    return out


# ---------------------------------------------------------------------------
# wells
# ---------------------------------------------------------------------------

def build_wells(f, dom, grid, critical_points, values=None):
    """One well per interior minimum at its barrier level, deduplicated.

    Returns (wells, c_max_id, a1_verdict); c_max_id is -1 on an A1 tie.
    """
    vals = values if values is not None else grid.node_value_array(f)
    minima = [c for c in critical_points
              if c.kind == INTERIOR_KIND and c.index == 0]
    raw = []
    for m in minima:
        level = barrier_height(f, grid, m.point, values=vals)
        nodes = frozenset(sublevel_component(f, grid, level, m.point,
                                             values=vals).tolist())
        raw.append((m, level, nodes))

    wells = []
    by_nodes = {}
    for m, level, nodes in raw:
        if nodes in by_nodes:
            wid = by_nodes[nodes]
            old = wells[wid]
            wells[wid] = Well(
                id=wid,
                member_minima=old.member_minima + (m,),
                level=min(old.level, level),
                node_set=nodes,
                boundary_contacts=old.boundary_contacts,
                depth=0.0)
        else:
            wid = len(wells)
            by_nodes[nodes] = wid
            wells.append(Well(id=wid, member_minima=(m,), level=level,
                              node_set=nodes, boundary_contacts=(), depth=0.0))

    finished = []
    for w in wells:
        depth = w.level - min(m.value for m in w.member_minima)
        contacts = _boundary_contacts(f, dom, grid, w.node_set, w.level)
        finished.append(Well(id=w.id, member_minima=w.member_minima,
                             level=w.level, node_set=w.node_set,
                             boundary_contacts=contacts, depth=depth))
    wells = finished

    if not wells:
        return wells, -1, Verdict("indeterminate", "no interior minima found")
    tol_depth = 1e-9 * max(1.0, float(np.abs(vals).max()))
    order = sorted(wells, key=lambda w: -w.depth)
    if len(order) > 1 and order[0].depth - order[1].depth <= tol_depth:
        return wells, -1, Verdict(
            "fail", f"deepest wells tie within {tol_depth:.3g}: "
                    f"{order[0].depth:.6g} vs {order[1].depth:.6g}")
    c_max = order[0]
    return wells, c_max.id, Verdict(
        "pass", f"unique deepest well id={c_max.id} depth={c_max.depth:.6g}")


def _boundary_contacts(f, dom, grid, node_set, level):
    """Boundary points where the well's closure meets the domain boundary.

    Boundary nodes adjacent to the well are clustered, then each cluster is
    polished to the boundary critical point of f at the contact (contacts of
    a well at level H satisfy f = H exactly on the true boundary).
    """
    node_arr = np.zeros(grid.n_interior, dtype=bool)
    node_arr[list(node_set)] = True
    touch = []
    for ii, bb in grid.dirichlet_edges_by_axis():
        sel = node_arr[ii]
        touch.extend((bb[sel] - grid.n_interior).tolist())
    if not touch:
        return ()
    touch = sorted(set(touch))
    pts = grid.boundary_coords[touch]

    # cluster by lattice proximity
    clusters = []
    used = np.zeros(len(pts), dtype=bool)
    sp = float(grid.spacing.max())
    for i in range(len(pts)):
        if used[i]:
            continue
        group = [i]
        used[i] = True
        frontier = [i]
        while frontier:
            j = frontier.pop()
            close = np.flatnonzero(~used & (np.linalg.norm(
                pts - pts[j], axis=1) <= 2.5 * sp))
            for k in close:
                used[k] = True
                group.append(int(k))
                frontier.append(int(k))
        clusters.append(group)

    tol = _tol_crit(f, grid)
    out = []
    for group in clusters:
        rep = pts[group[np.argmin(f.eval_many(pts[group]))]
                  if len(group) > 1 else group[0]]
        z = _newton_boundary(f, dom, project_to_boundary(dom, rep), tol)
        if z is None:
            z = project_to_boundary(dom, rep)
        else:
            z = project_to_boundary(dom, z)
            # Contacts are boundary-restricted local minima.  A cluster can
            # also arise from the well sneaking within one spacing of the
            # boundary without touching it; its polished point then lands on
            # a tangential saddle or maximum and must be dropped.
            if not isinstance(dom, Interval):
                try:
                    ht = tangential_hessian(f, dom, z, tol_crit=np.inf)
                    ev = np.linalg.eigvalsh(ht)
                    scale = max(1.0, float(np.abs(ev).max()))
                    if ev.min() < -1e-8 * scale:
                        continue
                except (NotOnBoundary, NotTangentiallyCritical):
                    pass
        out.append(tuple(float(v) for v in np.atleast_1d(z)))
    # dedup polished points
    dedup = []
    for z in out:
        if all(np.linalg.norm(np.array(z) - np.array(w)) > sp / 2 for w in dedup):
            dedup.append(z)
    return tuple(sorted(dedup))


# ---------------------------------------------------------------------------
# gradient flow
# ---------------------------------------------------------------------------

def _domain_signed(dom, x):
    if isinstance(dom, Interval):
        v = float(np.asarray(x).reshape(()))
        return max(dom.a - v, v - dom.b)
    return dom.g.eval(x)


def flow(f, dom, x, tol_crit=None, max_steps=10_000_000, rtol=1e-8,
         stop_below=None):
    """Integrate dx/dt = -grad f(x) by adaptive step-doubled RK4.

    Ends when |grad f| < tol_crit ("converged"), when the path crosses the
    boundary ("exited", crossing located by bisection to |g| < 1e-10), or --
    if stop_below is given -- once f drops below it ("stopped").
    """
    x = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    if not dom.contains(x):
        raise StartOutsideDomain(f"flow start {x} is outside the domain")
    if tol_crit is None:
        tol_crit = 1e-6 * max(1.0, float(np.linalg.norm(f.grad(x))))

    def rhs(p):
        return -f.grad(p)

    def rk4(p, dt):
        k1 = rhs(p)
        k2 = rhs(p + 0.5 * dt * k1)
        k3 = rhs(p + 0.5 * dt * k2)
        k4 = rhs(p + dt * k3)
        return p + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    scale = max(1.0, float(np.linalg.norm(x)))
    g0 = np.linalg.norm(f.grad(x))
    dt = 0.01 * scale / max(g0, 1e-12)
    t = 0.0
    arc = 0.0
    fv = f.eval(x)
    for step in range(int(max_steps)):
        g = f.grad(x)
        gn = np.linalg.norm(g)
        if gn < tol_crit:
            return FlowResult("converged", tuple(map(float, x)), t, arc, step)
        if stop_below is not None and fv < stop_below:
            return FlowResult("stopped", tuple(map(float, x)), t, arc, step)
        # step doubling error control; accepted steps must not increase f
        while True:
            full = rk4(x, dt)
            half = rk4(rk4(x, dt / 2), dt / 2)
            err = np.linalg.norm(full - half) / 15.0
            tol_step = rtol * max(np.linalg.norm(half - x), 1e-3 * dt * gn) + 1e-14
            if err <= tol_step or dt < 1e-14:
                fv_new = f.eval(half)
                if fv_new <= fv + 1e-12 * max(1.0, abs(fv)) or dt < 1e-14:
                    break
            dt *= 0.5
        x_new = half
        if not dom.contains(x_new):
            lo, hi = 0.0, 1.0
            a, b = x.copy(), x_new.copy()
            # bisect g along the straight segment of this step
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                xm = x + mid * (x_new - x)
                if abs(_domain_signed(dom, xm)) < 1e-10:
                    lo = hi = mid
                    break
                if _domain_signed(dom, xm) < 0:
                    lo = mid
                else:
                    hi = mid
            frac = 0.5 * (lo + hi)
            exit_pt = x + frac * (x_new - x)
            t += frac * dt
            arc += np.linalg.norm(exit_pt - x)
            return FlowResult("exited", tuple(map(float, exit_pt)), t, arc,
                              step + 1)
        t += dt
        arc += float(np.linalg.norm(x_new - x))
        x = x_new
        fv = fv_new
        if err < 0.1 * tol_step:
            dt *= 2.0
    raise MaxStepsExceeded(f"flow did not terminate in {max_steps} steps")


def in_attraction_basin(f, dom, x, well, grid):
    """True/False when the descent from x settles inside/outside the well;
    None when the flow result is indeterminate."""
    try:
        r = flow(f, dom, x)
    except MaxStepsExceeded:
        return None
    if r.exited:
        return False
    node = grid.nearest_interior(np.array(r.point))
    return node in well.node_set


# ---------------------------------------------------------------------------
# separating saddles
# ---------------------------------------------------------------------------

def find_separating_saddles(f, grid, critical_points, values=None):
    """Classify index-1 interior critical points by whether their two
    downhill sides land in distinct sublevel components just below the
    saddle level.  Returns (separating, indeterminate)."""
    dom = grid.dom
    vals = values if values is not None else _interior_values(f, grid)
    vals = vals[:grid.n_interior]
    lip = gradient_scale(f, grid)
    sp = float(grid.spacing.max())
    eps_level = max(4.0 * lip * sp, 1e-9)
    delta = 2.0 * sp

    margin = lip * sp                        # one grid cell of energy
    separating, indeterminate = [], []
    for c in critical_points:
        if c.kind != INTERIOR_KIND or c.index != 1:
            continue
        h = f.hess(c.point)
        w, v = np.linalg.eigh(h)
        vmin = v[:, 0]                       # most negative eigenvalue first
        level = c.value - eps_level
        labels = _sublevel_labels(grid, vals, level)
        sides = []
        ok = True
        for sgn in (+1.0, -1.0):
            seed = c.point + sgn * delta * vmin
            if not dom.contains(seed):
                indeterminate.append((c, "seed escaped the domain"))
                ok = False
                break
            try:
                # descend a couple of cells past the comparison level so the
                # landing point's nearest node is reliably below it
                r = flow(f, dom, seed, stop_below=level - 2 * margin)
            except MaxStepsExceeded:
                indeterminate.append((c, "descent exceeded the step budget"))
                ok = False
                break
            if r.terminal == "exited":
                indeterminate.append((c, "descent exited the domain above "
                                         "the comparison level"))
                ok = False
                break
            node = grid.nearest_interior(np.array(r.point))
            lab = labels[node]
            if lab < 0:
                indeterminate.append(
                    (c, "descent settled above the comparison level "
                        "(grid too coarse at this saddle)"))
                ok = False
                break
            sides.append(int(lab))
        if not ok:
            continue
        if sides[0] != sides[1]:
            separating.append(SeparatingSaddle(
                point=c, level=c.value, separated_pair=tuple(sorted(sides))))
    return separating, indeterminate


# ---------------------------------------------------------------------------
# generalized boundary saddles
# ---------------------------------------------------------------------------

def generalized_boundary_saddles(f, dom, critical_points, c_max=None,
                                 contact_tol=None):
    """Boundary local minima of f|_boundary with positive outward normal
    derivative, ordered with the ones on the deepest well's boundary first."""
    mins = [c for c in critical_points
            if c.kind == BOUNDARY_KIND and c.index == 0]
    if not mins:
        return []
    global_min = min(c.value for c in mins)
    vtol = 1e-9 * max(1.0, abs(global_min))

    out = []
    for c in mins:
        z = c.point
        n = dom.normal(z)
        dn = float(f.grad(z) @ n)
        if dn <= 0:
            continue
        det = tangential_hessian_det(f, dom, z, tol_crit=np.inf)
        on_cmax = False
        if c_max is not None and c_max.boundary_contacts:
            ctol = contact_tol if contact_tol is not None else 1e-6
            on_cmax = any(np.linalg.norm(z - np.array(b)) <= ctol
                          for b in c_max.boundary_contacts)
        out.append(GeneralizedSaddle(
            point=tuple(map(float, z)), value=c.value, normal_derivative=dn,
            tangential_hessian_det=det,
            is_global_boundary_min=c.value <= global_min + vtol,
            on_c_max=on_cmax))
    return sorted(out, key=lambda s: (not s.on_c_max,
                                      not s.is_global_boundary_min,
                                      s.value, s.point))


# ---------------------------------------------------------------------------
# assumptions
# ---------------------------------------------------------------------------

def check_assumptions(f, dom, grid, critical_points, wells, c_max_id,
                      a1_verdict, separating_saddles, indeterminate_saddles,
                      generalized_saddles):
    v = {}
    interior = [c for c in critical_points if c.kind == INTERIOR_KIND]
    boundary = [c for c in critical_points if c.kind == BOUNDARY_KIND]
    problems = []
    if any(c.degenerate for c in interior):
        problems.append("degenerate interior critical point")
    eps = max(dom.eps(), 1e-9)
    if any(dom.boundary_distance(c.point) <= eps for c in interior):
        problems.append("critical point on the boundary")
    tol = _tol_crit(f, grid)
    for c in boundary:
        if float(np.linalg.norm(f.grad(c.point))) < tol:
            problems.append("full gradient vanishes on the boundary")
            break
    for c in boundary:
        n = dom.normal(c.point)
        if float(f.grad(c.point) @ n) > 0 and c.degenerate:
            problems.append("degenerate boundary critical point with "
                            "positive normal derivative")
            break
    if not any(c.index == 0 for c in interior):
        problems.append("no interior minimum")
    v["A0"] = (Verdict("fail", "; ".join(problems)) if problems
               else Verdict("pass", f"{len(interior)} interior critical "
                            f"points, {len(boundary)} boundary ones, all "
                            "non-degenerate (sampled seeds)"))

    v["A1"] = a1_verdict
    c_max = next((w for w in wells if w.id == c_max_id), None)

    if c_max is None:
        why = "no unique deepest well"
        v["A2"] = Verdict("indeterminate", why)
        v["A3"] = Verdict("indeterminate", why)
        v["A4"] = Verdict("indeterminate", why)
        return v

    if c_max.boundary_contacts:
        v["A2"] = Verdict("pass", f"deepest well touches the boundary at "
                                  f"{len(c_max.boundary_contacts)} point(s)")
    else:
        v["A2"] = Verdict("fail", "deepest well's closure stays interior")

    bmins = [c for c in critical_points if c.kind == BOUNDARY_KIND
             and c.index == 0]
    if not bmins:
        v["A3"] = Verdict("indeterminate", "no boundary minima found")
    else:
        min_bd = min(c.value for c in bmins)
        vtol = 1e-6 * max(1.0, abs(min_bd))
        if not c_max.boundary_contacts:
            v["A3"] = Verdict("indeterminate", "no boundary contact")
        else:
            bad = [z for z in c_max.boundary_contacts
                   if f.eval(z) > min_bd + vtol]
            if bad:
                v["A3"] = Verdict(
                    "fail", f"contact at value {f.eval(bad[0]):.6g} above "
                            f"min boundary value {min_bd:.6g}")
            else:
                v["A3"] = Verdict("pass", "all deepest-well contacts attain "
                                          f"the boundary minimum {min_bd:.6g}")

    level_tol = grid_energy_tolerance(f, grid) + 1e-9
    node_arr = np.zeros(grid.n_interior, dtype=bool)
    node_arr[list(c_max.node_set)] = True

    def adjacent_to_cmax(point):
        d2 = ((grid.interior_coords[node_arr] - point) ** 2).sum(axis=1)
        return bool(d2.min() <= (2.0 * float(grid.spacing.max())) ** 2)

    offenders = [s for s in separating_saddles
                 if abs(s.level - c_max.level) <= level_tol
                 and adjacent_to_cmax(s.point.point)]
    if offenders:
        z = offenders[0].point
        v["A4"] = Verdict("fail", f"separating saddle at {z.location} "
                                  f"(level {z.value:.6g}) lies on the "
                                  "deepest well's boundary")
    else:
        risky = [c for c, _why in indeterminate_saddles
                 if abs(c.value - c_max.level) <= level_tol
                 and adjacent_to_cmax(c.point)]
        if risky:
            v["A4"] = Verdict("indeterminate",
                              "unclassified saddle at the deepest well level")
        else:
            v["A4"] = Verdict("pass", "no separating saddle at the deepest "
                                      "well's level adjacent to it")
    return v


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def analyze(f, dom, grid):
    """Full landscape analysis; returns a LandscapeReport."""
    vals = grid.node_value_array(f)
    cps = find_critical_points(f, dom, grid)
    wells, c_max_id, a1 = build_wells(f, dom, grid, cps, values=vals)
    seps, indet = find_separating_saddles(f, grid, cps,
                                          values=vals[:grid.n_interior])
    c_max = next((w for w in wells if w.id == c_max_id), None)
    sp = float(grid.spacing.max())
    gsads = generalized_boundary_saddles(f, dom, cps, c_max=c_max,
                                         contact_tol=max(sp, 1e-6))
    verd = check_assumptions(f, dom, grid, cps, wells, c_max_id, a1, seps,
                             indet, gsads)
    bmins = [c.value for c in cps if c.kind == BOUNDARY_KIND and c.index == 0]
    return LandscapeReport(
        critical_points=cps, wells=wells, c_max_id=c_max_id,
        separating_saddles=seps, indeterminate_saddles=indet,
        generalized_saddles=gsads, assumption_verdicts=verd,
        min_boundary_value=min(bmins) if bmins else np.nan,
        energy_tolerance=grid_energy_tolerance(f, grid))
