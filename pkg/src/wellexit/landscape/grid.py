"""Uniform lattice discretizations of interval and implicit domains.

Nodes are tagged interior (inside the domain), boundary (outside or on the
boundary but adjacent to an interior node along an axis), or exterior.
Graph edges join axis neighbors; boundary nodes act as absorbing targets.
"""

import numpy as np

from ..errors import GridTooCoarse
from .geometry import Interval

EXTERIOR, INTERIOR, BOUNDARY = 0, 1, 2


class Grid:
    """Tagged lattice over a domain.  Construct with build_grid()."""

    def __init__(self, dom, spacing, origin, shape, tags):
        self.dom = dom
        self.spacing = spacing          # (d,) array
        self.origin = origin            # coordinates of lattice index 0
        self.shape = tuple(shape)
        self.tags = tags                # int8, lattice shape
        self.dim = len(self.shape)

        interior_mask = tags == INTERIOR
        self.n_interior = int(interior_mask.sum())
        boundary_mask = tags == BOUNDARY
        self.n_boundary = int(boundary_mask.sum())

        # compact ids: interior 0..Ni-1, boundary Ni..Ni+Nb-1, else -1
        gid = np.full(self.shape, -1, dtype=np.int64)
        gid[interior_mask] = np.arange(self.n_interior)
        gid[boundary_mask] = self.n_interior + np.arange(self.n_boundary)
        self._gid = gid

        self.interior_multi = np.argwhere(interior_mask)
        self.boundary_multi = np.argwhere(boundary_mask)
        self.interior_coords = self.coords_of(self.interior_multi)
        self.boundary_coords = self.coords_of(self.boundary_multi)

    # -- geometry ----------------------------------------------------------
    def coords_of(self, multi):
        multi = np.asarray(multi)
        return self.origin + multi * self.spacing

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def node_value_array(self, f):
        """f evaluated on interior then boundary nodes (compact id order)."""
        pts = np.vstack([self.interior_coords, self.boundary_coords])
        return f.eval_many(pts)

    def nearest_interior(self, x):
        """Compact id of the interior node nearest to x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.rint((x - self.origin) / self.spacing).astype(np.int64)
        idx = np.clip(idx, 0, np.array(self.shape) - 1)
        if self.tags[tuple(idx)] == INTERIOR:
            return int(self._gid[tuple(idx)])
        # search expanding rings around the rounded index
        for r in range(1, 7):
            lo = np.maximum(idx - r, 0)
            hi = np.minimum(idx + r + 1, self.shape)
            sl = tuple(slice(l, h) for l, h in zip(lo, hi))
            cand = np.argwhere(self.tags[sl] == INTERIOR)
            if cand.size:
                cand = cand + lo
                pts = self.coords_of(cand)
                best = cand[np.argmin(((pts - x) ** 2).sum(axis=1))]
                return int(self._gid[tuple(best)])
        raise ValueError(f"no interior node near {x}")

    # -- graph structure ----------------------------------------------------
    def _axis_pairs(self, axis, tag_lo, tag_hi):
        sl_lo = tuple(slice(0, -1) if a == axis else slice(None)
                      for a in range(self.dim))
        sl_hi = tuple(slice(1, None) if a == axis else slice(None)
                      for a in range(self.dim))
        mask = (self.tags[sl_lo] == tag_lo) & (self.tags[sl_hi] == tag_hi)
        lo_multi = np.argwhere(mask)
        hi_multi = lo_multi.copy()
        hi_multi[:, axis] += 1
        return (self._gid[tuple(lo_multi.T)] if lo_multi.size else
                np.empty(0, dtype=np.int64),
                self._gid[tuple(hi_multi.T)] if hi_multi.size else
                np.empty(0, dtype=np.int64))

    def _cached(self, key, builder):
        cache = self.__dict__.setdefault("_cache", {})
        if key not in cache:
            cache[key] = builder()
        return cache[key]

    def interior_edges_by_axis(self):
        """Per axis: (lo_ids, hi_ids) for interior-interior neighbor pairs."""
        return self._cached("iexa", lambda: [
            self._axis_pairs(a, INTERIOR, INTERIOR) for a in range(self.dim)])

    def interior_edges(self):
        """(E, 2) interior-interior pairs over all axes (compact ids)."""
        def build():
            parts = [np.stack(p, axis=1)
                     for p in self.interior_edges_by_axis() if p[0].size]
            if not parts:
                return np.empty((0, 2), dtype=np.int64)
            return np.vstack(parts)
        return self._cached("iedges", build)

    def dirichlet_edges_by_axis(self):
        """Per axis: (interior_ids, boundary_ids) for interior-boundary pairs."""
        def build():
            out = []
            for a in range(self.dim):
                lo_i, hi_b = self._axis_pairs(a, INTERIOR, BOUNDARY)
                lo_b, hi_i = self._axis_pairs(a, BOUNDARY, INTERIOR)
                out.append((np.concatenate([lo_i, hi_i]),
                            np.concatenate([hi_b, lo_b])))
            return out
        return self._cached("dedges", build)

    def all_edges(self):
        """(E, 2) interior-interior plus interior-boundary pairs."""
        def build():
            parts = [self.interior_edges()]
            for ii, bb in self.dirichlet_edges_by_axis():
                if ii.size:
                    parts.append(np.stack([ii, bb], axis=1))
            return np.vstack(parts)
        return self._cached("aedges", build)

    def __repr__(self):
        return (f"Grid(shape={self.shape}, interior={self.n_interior}, "
                f"boundary={self.n_boundary})")


def build_grid(dom, spacing):
    """Tag a uniform lattice over the domain; spacing is scalar or per-axis."""
    d = dom.dim
    sp = np.atleast_1d(np.asarray(spacing, dtype=float))
    if sp.size == 1:
        sp = np.repeat(sp, d)
    if sp.shape != (d,) or np.any(sp <= 0):
        raise ValueError(f"bad spacing {spacing!r} for dim {d}")

    if isinstance(dom, Interval):
        origin = np.array([dom.a])
        n = int(np.ceil((dom.b - dom.a) / sp[0])) + 2
        shape = (n,)
        coords = origin[0] + sp[0] * np.arange(n)
        tags = np.full(shape, EXTERIOR, dtype=np.int8)
        tags[(coords > dom.a) & (coords < dom.b)] = INTERIOR
    else:
        box = dom.bounding_box
        origin = box[:, 0] - sp
        counts = np.ceil((box[:, 1] - box[:, 0]) / sp).astype(int) + 3
        shape = tuple(counts)
        axes = [origin[i] + sp[i] * np.arange(counts[i]) for i in range(d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        inside = dom.g.eval_many(pts) < 0.0
        tags = np.where(inside.reshape(shape), INTERIOR, EXTERIOR).astype(np.int8)
        # boundedness check: nothing inside may fall outside the bounding box
        outside_box = np.any((pts < box[:, 0] - 1e-12 * sp)
                             | (pts > box[:, 1] + 1e-12 * sp), axis=1)
        if np.any(inside & outside_box):
            raise ValueError("domain {g<0} is not contained in bounding_box")

    # boundary tags: non-interior nodes with an interior axis neighbor
    interior = tags == INTERIOR
    near = np.zeros_like(interior)
    for a in range(d):
        sl_lo = tuple(slice(0, -1) if i == a else slice(None) for i in range(d))
        sl_hi = tuple(slice(1, None) if i == a else slice(None) for i in range(d))
        near[sl_lo] |= interior[sl_hi]
        near[sl_hi] |= interior[sl_lo]
    tags[near & ~interior] = BOUNDARY

    for a in range(d):
        levels = np.unique(np.argwhere(interior)[:, a]) if interior.any() else []
        if len(levels) < 3:
            raise GridTooCoarse(
                f"axis {a}: {len(levels)} interior node levels (< 3); "
                f"spacing {sp[a]} too large")
    return Grid(dom, sp, origin, shape, tags)
