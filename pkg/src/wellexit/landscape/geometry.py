"""Bounded domains and boundary differential operators.

1D domains are open intervals (a, b).  Higher-dimensional domains are
implicit level sets Omega = {g < 0} for a smooth g with outward normal
grad(g)/|grad(g)| on the zero level set.
"""

import numpy as np

from ..errors import NotOnBoundary, NotTangentiallyCritical
from .potentials import Polynomial, Potential


class Interval:
    """Open interval (a, b) with outward normals -1 at a and +1 at b."""

    dim = 1

    def __init__(self, a, b, boundary_eps=None):
        a, b = float(a), float(b)
        if not a < b:
            raise ValueError(f"need a < b, got ({a}, {b})")
        self.a = a
        self.b = b
        self.boundary_eps = boundary_eps

    @property
    def bounding_box(self):
        return np.array([[self.a, self.b]])

    def diameter(self):
        return self.b - self.a

    def eps(self):
        if self.boundary_eps is not None:
            return self.boundary_eps
        return 1e-8 * self.diameter()

    def with_boundary_eps(self, eps):
        return Interval(self.a, self.b, boundary_eps=eps)

    def contains(self, x):
        x = float(np.asarray(x).reshape(()))
        return self.a < x < self.b

    def boundary_distance(self, x):
        x = float(np.asarray(x).reshape(()))
        return min(abs(x - self.a), abs(x - self.b))

    def normal(self, z):
        z = float(np.asarray(z).reshape(()))
        eps = self.eps()
        if abs(z - self.a) <= eps:
            return np.array([-1.0])
        if abs(z - self.b) <= eps:
            return np.array([1.0])
        raise NotOnBoundary(f"{z} is not within {eps} of {{{self.a}, {self.b}}}")

    def __repr__(self):
        return f"Interval({self.a}, {self.b})"


class ImplicitDomain:
    """Omega = {g < 0} for a smooth g, assumed bounded inside bounding_box."""

    def __init__(self, g, bounding_box, boundary_eps=None):
        if not isinstance(g, Potential):
            raise TypeError("g must be a Potential")
        self.g = g
        self.dim = g.dim
        box = np.asarray(bounding_box, dtype=float).reshape(self.dim, 2)
        if np.any(box[:, 0] >= box[:, 1]):
            raise ValueError("bounding box sides must have positive length")
        self.bounding_box = box
        self.boundary_eps = boundary_eps

    def diameter(self):
        return float(np.linalg.norm(self.bounding_box[:, 1]
                                    - self.bounding_box[:, 0]))

    def eps(self):
        if self.boundary_eps is not None:
            return self.boundary_eps
        return 1e-8 * self.diameter()

    def with_boundary_eps(self, eps):
        return ImplicitDomain(self.g, self.bounding_box, boundary_eps=eps)

    def contains(self, x):
        return self.g.eval(x) < 0.0

    def contains_many(self, pts):
        return self.g.eval_many(pts) < 0.0

    def boundary_distance(self, x):
        # first-order estimate |g| / |grad g|
        gv = self.g.eval(x)
        gn = np.linalg.norm(self.g.grad(x))
        if gn == 0.0:
            return np.inf if gv != 0.0 else 0.0
        return abs(gv) / gn

    def normal(self, z):
        eps = self.eps()
        if self.boundary_distance(z) > eps:
            raise NotOnBoundary(
                f"{np.asarray(z)} is ~{self.boundary_distance(z):.3g} from "
                f"the boundary (eps={eps:.3g})")
        gg = self.g.grad(z)
        return gg / np.linalg.norm(gg)

    def __repr__(self):
        return f"ImplicitDomain(dim={self.dim})"


def ball(center, radius, boundary_eps=None):
    """Ball domain {|x - center| < radius} as an ImplicitDomain."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    d = center.shape[0]
    r = float(radius)
    terms = {tuple([0] * d): float(center @ center - r * r)}
    for i in range(d):
        e2 = [0] * d
        e2[i] = 2
        terms[tuple(e2)] = 1.0
        if center[i] != 0.0:
            e1 = [0] * d
            e1[i] = 1
            terms[tuple(e1)] = -2.0 * center[i]
    g = Polynomial(terms)
    box = np.stack([center - r, center + r], axis=1)
    return ImplicitDomain(g, box, boundary_eps=boundary_eps)


def project_to_boundary(dom, x, tol=1e-12, max_iter=60):
    """Nearest-boundary projection (Newton along grad g; exact for intervals)."""
    if isinstance(dom, Interval):
        x = float(np.asarray(x).reshape(()))
        return np.array([dom.a if abs(x - dom.a) <= abs(x - dom.b) else dom.b])
    z = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    for _ in range(max_iter):
        gv = dom.g.eval(z)
        gg = dom.g.grad(z)
        nrm2 = gg @ gg
        if nrm2 == 0.0:
            break
        step = gv / nrm2 * gg
        z -= step
        if abs(gv) < tol * max(1.0, np.sqrt(nrm2)):
            break
    return z


def boundary_normal_derivative(f, dom, z):
    """grad f . n at a boundary point z (outward normal convention)."""
    eps = dom.eps()
    if dom.boundary_distance(z) > eps:
        raise NotOnBoundary(
            f"{np.asarray(z)} is ~{dom.boundary_distance(z):.3g} from the "
            f"boundary (eps={eps:.3g})")
    n = dom.normal(z)
    return float(f.grad(z) @ n)


def _tangent_basis(n):
    # rows 1..d-1 of the SVD right factor span the orthogonal complement
    _, _, vt = np.linalg.svd(n.reshape(1, -1))
    return vt[1:]


def tangential_hessian(f, dom, z, tol_crit=None):
    """Hessian of f restricted to the boundary, at a critical point of that
    restriction, in an orthonormal tangent basis.

    Entries are u_i' Hess(f) u_j - (dn f) * u_i' Hess(g) u_j / |grad g|,
    the curvature-corrected second derivative along boundary curves.  In 1D
    the boundary is a point set and the matrix is empty (determinant 1).
    """
    eps = dom.eps()
    if dom.boundary_distance(z) > eps:
        raise NotOnBoundary(
            f"{np.asarray(z)} is ~{dom.boundary_distance(z):.3g} from the "
            f"boundary (eps={eps:.3g})")
    if dom.dim == 1:
        return np.zeros((0, 0))
    n = dom.normal(z)
    gf = f.grad(z)
    dn = float(gf @ n)
    tang = gf - dn * n
    tol = tol_crit if tol_crit is not None else 1e-6 * max(1.0, np.linalg.norm(gf))
    if np.linalg.norm(tang) > tol:
        raise NotTangentiallyCritical(
            f"tangential gradient has norm {np.linalg.norm(tang):.3g} > {tol:.3g}")
    U = _tangent_basis(n)
    hf = f.hess(z)
    hg = dom.g.hess(z)
    gn = np.linalg.norm(dom.g.grad(z))
    return U @ (hf - (dn / gn) * hg) @ U.T


def tangential_hessian_det(f, dom, z, tol_crit=None):
    """det of tangential_hessian; 1.0 in 1D by the empty-product convention."""
    m = tangential_hessian(f, dom, z, tol_crit=tol_crit)
    return float(np.linalg.det(m))
