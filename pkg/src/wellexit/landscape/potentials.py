"""Potential energy fields with analytic gradients and Hessians.

Three families are supported, matching what experiment configs can declare:
named built-ins, polynomials (coefficient per monomial multi-index), and
sums of Gaussians (centers, amplitudes, covariances).
"""

import numpy as np


class Potential:
    """A smooth scalar field f on R^d with analytic derivatives.

    Instances are immutable after construction and safe to share across
    threads.  Subclasses implement ``eval``, ``grad``, ``hess`` and the
    vectorized ``eval_many`` / ``grad_many`` used by grids and simulators.
    """

    dim = None

    def eval(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def hess(self, x):
        raise NotImplementedError

    def eval_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.array([self.eval(p) for p in pts])

    def grad_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.array([self.grad(p) for p in pts])

    @property
    def source(self):
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(x)


def _as_point(x, dim):
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.shape != (dim,):
        raise ValueError(f"expected point in R^{dim}, got shape {p.shape}")
    return p


class Polynomial(Potential):
    """f(x) = sum_m  c_m * prod_i x_i^{e_mi}.

    ``terms`` maps exponent multi-indices to coefficients, e.g. the 1D
    double well (x^2-1)^2 is {(0,): 1, (2,): -2, (4,): 1}.
    """

    def __init__(self, terms, name=None, params=None):
        if isinstance(terms, dict):
            items = terms.items()
        else:
            items = list(terms)
        merged = {}
        dim = None
        for exps, coef in items:
            exps = tuple(int(e) for e in exps)
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent")
            if dim is None:
                dim = len(exps)
            elif len(exps) != dim:
                raise ValueError("inconsistent multi-index lengths")
            merged[exps] = merged.get(exps, 0.0) + float(coef)
        if dim is None:
            raise ValueError("empty polynomial")
        self._terms = tuple(sorted((e, c) for e, c in merged.items() if c != 0.0))
        if not self._terms:
            self._terms = ((tuple([0] * dim), 0.0),)
        self.dim = dim
        self._name = name
        self._params = dict(params) if params else None
        self._E = np.array([e for e, _ in self._terms], dtype=np.int64)
        self._C = np.array([c for _, c in self._terms], dtype=float)

    @property
    def terms(self):
        return dict(self._terms)

    def derivative(self, axis):
        """The partial derivative along ``axis`` as a new Polynomial."""
        out = {}
        for exps, coef in self._terms:
            e = exps[axis]
            if e == 0:
                continue
            new = list(exps)
            new[axis] = e - 1
            key = tuple(new)
            out[key] = out.get(key, 0.0) + coef * e
        if not out:
            out[tuple([0] * self.dim)] = 0.0
        return Polynomial(out)

    @property
    def _grads(self):
        cached = self.__dict__.get("_grads_cache")
        if cached is None:
            cached = tuple(self.derivative(k) for k in range(self.dim))
            self.__dict__["_grads_cache"] = cached
        return cached

    def eval(self, x):
        p = _as_point(x, self.dim)
        return float(self.eval_many(p[None, :])[0])

    def eval_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        monos = np.prod(pts[:, None, :] ** self._E[None, :, :], axis=2)
        # sum (not matmul): per-row pairwise reduction is independent of the
        # batch size, so scalar and vectorized paths agree bit for bit
        return (monos * self._C).sum(axis=1)

    def grad(self, x):
        p = _as_point(x, self.dim)
        return self.grad_many(p[None, :])[0]

    def grad_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.stack([g.eval_many(pts) for g in self._grads], axis=1)

    def hess(self, x):
        p = _as_point(x, self.dim)
        h = np.empty((self.dim, self.dim))
        for i in range(self.dim):
            gi = self._grads[i]
            for j in range(i, self.dim):
                h[i, j] = h[j, i] = gi._grads[j].eval(p)
        return h

    def __add__(self, other):
        if isinstance(other, Polynomial):
            out = dict(self._terms)
            for e, c in other._terms:
                out[e] = out.get(e, 0.0) + c
            return Polynomial(out)
        if isinstance(other, (int, float)):
            out = dict(self._terms)
            zero = tuple([0] * self.dim)
            out[zero] = out.get(zero, 0.0) + float(other)
            return Polynomial(out)
        return NotImplemented

    __radd__ = __add__

    def __mul__(self, s):
        if isinstance(s, (int, float)):
            return Polynomial({e: c * s for e, c in self._terms})
        return NotImplemented

    __rmul__ = __mul__

    @property
    def source(self):
        if self._name is not None:
            src = {"kind": "builtin", "name": self._name}
            if self._params:
                src["params"] = dict(self._params)
            return src
        return {"kind": "polynomial",
                "terms": [[list(e), c] for e, c in self._terms]}

    def __repr__(self):
        if self._name:
            return f"Polynomial(builtin={self._name!r}, dim={self.dim})"
        return f"Polynomial({len(self._terms)} terms, dim={self.dim})"


class GaussianMixture(Potential):
    """f(x) = sum_i A_i exp(-(x-c_i)' P_i (x-c_i) / 2), P_i = cov_i^{-1}.

    ``covariances`` may be scalars (isotropic), length-d vectors
    (diagonal), or full d x d matrices, one per component.
    """

    def __init__(self, centers, amplitudes, covariances, name=None):
        C = np.atleast_2d(np.asarray(centers, dtype=float))
        m, d = C.shape
        A = np.asarray(amplitudes, dtype=float).reshape(m)
        covs = []
        for cov in covariances:
            cov = np.asarray(cov, dtype=float)
            if cov.ndim == 0:
                cov = np.eye(d) * float(cov)
            elif cov.ndim == 1:
                cov = np.diag(cov)
            covs.append(cov)
        S = np.array(covs)
        if S.shape != (m, d, d):
            raise ValueError(f"covariances must broadcast to ({m},{d},{d})")
        self.dim = d
        self._name = name
        self._C = C
        self._A = A
        self._S = S
        P = np.array([np.linalg.inv(s) for s in S])
        self._P = 0.5 * (P + np.swapaxes(P, 1, 2))

    def _weights(self, pts):
        r = pts[:, None, :] - self._C[None, :, :]
        qf = np.einsum("nmi,mij,nmj->nm", r, self._P, r)
        return self._A[None, :] * np.exp(-0.5 * qf), r

    def eval(self, x):
        p = _as_point(x, self.dim)
        w, _ = self._weights(p[None, :])
        return float(w.sum())

    def eval_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        w, _ = self._weights(pts)
        return w.sum(axis=1)

    def grad(self, x):
        p = _as_point(x, self.dim)
        return self.grad_many(p[None, :])[0]

    def grad_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        w, r = self._weights(pts)
        pr = np.einsum("mij,nmj->nmi", self._P, r)
        return -np.einsum("nm,nmi->ni", w, pr)

    def hess(self, x):
        p = _as_point(x, self.dim)
        w, r = self._weights(p[None, :])
        pr = np.einsum("mij,mj->mi", self._P, r[0])
        h = np.einsum("m,mi,mj->ij", w[0], pr, pr)
        h -= np.einsum("m,mij->ij", w[0], self._P)
        return 0.5 * (h + h.T)

    @property
    def source(self):
        if self._name is not None:
            return {"kind": "builtin", "name": self._name}
        return {"kind": "gaussians",
                "centers": self._C.tolist(),
                "amplitudes": self._A.tolist(),
                "covariances": self._S.tolist()}

    def __repr__(self):
        return f"GaussianMixture({len(self._A)} components, dim={self.dim})"


# ---------------------------------------------------------------------------
# built-in potentials
# ---------------------------------------------------------------------------

def double_well_1d(tilt=0.0):
    """(x^2-1)^2 + tilt*x; minima near +-1, saddle at 0 (for small tilt)."""
    terms = {(0,): 1.0, (2,): -2.0, (4,): 1.0}
    if tilt:
        terms[(1,)] = float(tilt)
    return Polynomial(terms, name="double_well_1d",
                      params={"tilt": float(tilt)} if tilt else None)


def double_well_2d(c=3.0, tilt=0.0):
    """(x^2-1)^2 + c*y^2 + tilt*x; minima near (+-1, 0), saddle at origin."""
    terms = {(0, 0): 1.0, (2, 0): -2.0, (4, 0): 1.0, (0, 2): float(c)}
    if tilt:
        terms[(1, 0)] = float(tilt)
    params = {"c": float(c)}
    if tilt:
        params["tilt"] = float(tilt)
    return Polynomial(terms, name="double_well_2d", params=params)


# Degree-6 polynomial with minima at -1.4, 0.2, 1.5 and interior maxima at
# -0.55, 0.9.  On the interval (-1.62, 1.69) this yields three wells: the
# deepest touches the left endpoint (level f(-1.62) ~ 0.63119), the middle
# one is strictly interior (level f(0.9) ~ 1.08002), and the right one
# touches the right endpoint at level f(1.69) ~ 0.99340 above the left
# endpoint value.
_TRIPLE_WELL_1D_COEFFS = (
    0.8959029333333334,     # 839909/937500
    -0.4158,
    0.8826,
    0.8643333333333333,     # 2593/3000
    -1.235,
    -0.26,
    0.3333333333333333,     # 1/3
)

#: canonical interval for the 1D triple well
TRIPLE_WELL_1D_DOMAIN = (-1.62, 1.69)


def triple_well_1d():
    """Fixed 1D landscape with three wells; see TRIPLE_WELL_1D_DOMAIN."""
    return Polynomial({(i,): c for i, c in enumerate(_TRIPLE_WELL_1D_COEFFS)},
                      name="triple_well_1d")


# f(x,y) = p(x) + q(x) y^2 on the disk of radius 2.15.  p has minima at
# x = -1.95, -0.15 (global, p=0), 1.8 and maxima at -1.35, 1.0; the
# coefficients are tuned so that p(1.0) = p(2.15) = 1 and the level-1 set
# is tangent to the circle at (x*, +-y*), x* ~ -0.08044.  This produces
# three wells whose deepest has two boundary contacts plus an interior
# saddle at (1, 0) exactly at its barrier level.
_THREE_WELL_2D_P_COEFFS = (
    0.044587073474002946,
    0.5788412253130792,
    1.752167831967012,
    -0.9656702279473519,
    -0.8274123281224114,
    0.3452980120575967,
    0.10832584600989184,
    -0.03613743275181948,
)
_THREE_WELL_2D_QC = 0.21176646414983813    # q(x) = qc * (1 + 2 x^2)

#: canonical disk radius for the 2D three-well
THREE_WELL_2D_RADIUS = 2.15


def three_well_2d():
    """Fixed 2D landscape with three wells; see THREE_WELL_2D_RADIUS."""
    terms = {(i, 0): c for i, c in enumerate(_THREE_WELL_2D_P_COEFFS)}
    terms[(0, 2)] = _THREE_WELL_2D_QC
    terms[(2, 2)] = 2.0 * _THREE_WELL_2D_QC
    return Polynomial(terms, name="three_well_2d")


BUILTIN_POTENTIALS = {
    "double_well_1d": double_well_1d,
    "triple_well_1d": triple_well_1d,
    "double_well_2d": double_well_2d,
    "three_well_2d": three_well_2d,
}


def make_potential(spec):
    """Build a Potential from a config mapping (see `source` formats)."""
    if isinstance(spec, Potential):
        return spec
    if not isinstance(spec, dict):
        raise ValueError(f"potential spec must be a mapping, got {type(spec)}")
    kind = spec.get("kind")
    if kind == "builtin":
        name = spec.get("name")
        if name not in BUILTIN_POTENTIALS:
            raise ValueError(f"unknown builtin potential {name!r}; "
                             f"available: {sorted(BUILTIN_POTENTIALS)}")
        return BUILTIN_POTENTIALS[name](**spec.get("params", {}))
    if kind == "polynomial":
        return Polynomial({tuple(e): c for e, c in spec["terms"]})
    if kind == "gaussians":
        return GaussianMixture(spec["centers"], spec["amplitudes"],
                               spec["covariances"])
    raise ValueError(f"unknown potential kind {kind!r}")
