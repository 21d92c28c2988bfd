"""Pure-NumPy path stepping: the fallback twin of the compiled kernel.

Both backends draw per-path Philox streams in identical block sizes and
apply identical arithmetic, so a given (seed, config) produces
bit-identical samples on either one; the compiled kernel is just
faster.  The rules that guarantee this:

- one Philox stream per path, keyed (seed, path_index), normals drawn
  in blocks of BLOCK_STEPS x dim;
- polynomial drift accumulated term by term in table order, powers
  expanded as repeated multiplication (never libm pow);
- the Euler step evaluated as ``(x - g*dt) + sqrt_hdt*xi``, exactly
  that association;
- crossing localization by bisection on the straight segment, to
  |g| < 1e-10 in the domain's implicit function (interval exits then
  clamp to the crossed endpoint).

``run_paths_poly`` here and in ``_kernels`` share a signature; the
dispatcher in ``sde`` treats them as interchangeable.
"""

import numpy as np

BLOCK_STEPS = 1024
BISECT_TOL = 1e-10
BISECT_MAX_ITER = 200


def gradient_tables(f):
    """Exponent/coefficient tables of grad f with per-axis offsets."""
    dim = f.dim
    exps, coefs, off = [], [], [0]
    for d in range(dim):
        for e, c in f.derivative(d).terms.items():
            exps.append(e)
            coefs.append(c)
        off.append(len(coefs))
    E = np.array(exps, dtype=np.int64).reshape(len(coefs), dim)
    return E, np.array(coefs, dtype=np.float64), np.array(off, dtype=np.int64)


def implicit_tables(g):
    """Exponent/coefficient tables of a domain's implicit polynomial."""
    items = list(g.terms.items())
    E = np.array([e for e, _ in items], dtype=np.int64).reshape(-1, g.dim)
    C = np.array([c for _, c in items], dtype=np.float64)
    return E, C


def _poly_eval_batch(E, C, lo, hi, X):
    acc = np.zeros(X.shape[0])
    for t in range(lo, hi):
        val = np.full(X.shape[0], C[t])
        for d in range(X.shape[1]):
            for _ in range(E[t, d]):
                val = val * X[:, d]
        acc = acc + val
    return acc


def _poly_eval_point(E, C, lo, hi, x):
    acc = 0.0
    for t in range(lo, hi):
        val = C[t]
        for d in range(len(x)):
            for _ in range(E[t, d]):
                val = val * x[d]
        acc = acc + val
    return acc


def _grad_batch(E, C, off, X):
    G = np.empty_like(X)
    for d in range(X.shape[1]):
        G[:, d] = _poly_eval_batch(E, C, off[d], off[d + 1], X)
    return G


def _inside_batch(dom_spec, X):
    if dom_spec[0] == "interval":
        return (X[:, 0] > dom_spec[1]) & (X[:, 0] < dom_spec[2])
    Eg, Cg = dom_spec[1], dom_spec[2]
    return _poly_eval_batch(Eg, Cg, 0, len(Cg), X) < 0.0


def _gap_point(dom_spec, x):
    """Positive inside, negative outside; |gap| = |g| for implicit domains."""
    if dom_spec[0] == "interval":
        g1 = x[0] - dom_spec[1]
        g2 = dom_spec[2] - x[0]
        return g1 if g1 < g2 else g2
    Eg, Cg = dom_spec[1], dom_spec[2]
    return -_poly_eval_point(Eg, Cg, 0, len(Cg), x)


def _bisect_exit(dom_spec, xp, xn):
    """Crossing point and fraction theta on the segment xp -> xn."""
    lo, hi = 0.0, 1.0
    mid = 1.0
    xm = xn
    gm = _gap_point(dom_spec, xn)
    it = 0
    while abs(gm) >= BISECT_TOL and it < BISECT_MAX_ITER:
        mid = 0.5 * (lo + hi)
        xm = xp + mid * (xn - xp)
        gm = _gap_point(dom_spec, xm)
        if gm > 0.0:
            lo = mid
        else:
            hi = mid
        it += 1
    if dom_spec[0] == "interval":
        a, b = dom_spec[1], dom_spec[2]
        xm = np.array([a if abs(xm[0] - a) <= abs(xm[0] - b) else b])
    return xm, mid


def run_paths_poly(tables, dom_spec, starts, dt, sqrt_hdt, max_steps,
                   seed, path_offset):
    """Simulate len(starts) paths; path i uses stream (seed, path_offset+i).

    Returns (exit_points, exit_times, censored) arrays indexed like
    ``starts``.  Censored entries hold the final interior position and
    the time max_steps*dt.
    """
    E, C, off = tables
    starts = np.asarray(starts, dtype=np.float64)
    n, dim = starts.shape
    out_pts = np.empty((n, dim))
    out_t = np.full(n, max_steps * dt)
    out_c = np.zeros(n, dtype=bool)
    if n == 0:
        return out_pts, out_t, out_c

    gens = [np.random.Generator(np.random.Philox(key=[seed, path_offset + i]))
            for i in range(n)]
    X = starts.copy()
    alive = np.arange(n)
    k = 0
    while alive.size and k < max_steps:
        m = min(BLOCK_STEPS, max_steps - k)
        noise = np.stack([gens[i].standard_normal((BLOCK_STEPS, dim))
                          for i in alive])
        for kk in range(m):
            Xp = X
            G = _grad_batch(E, C, off, Xp)
            X = (Xp - G * dt) + sqrt_hdt * noise[:, kk, :]
            inside = _inside_batch(dom_spec, X)
            if not inside.all():
                for j in np.flatnonzero(~inside):
                    i = alive[j]
                    pt, theta = _bisect_exit(dom_spec, Xp[j], X[j])
                    out_pts[i] = pt
                    out_t[i] = ((k + kk) + theta) * dt
                alive = alive[inside]
                X = X[inside]
                noise = noise[inside]
                if alive.size == 0:
                    break
        k += m

    for j, i in enumerate(alive):
        out_pts[i] = X[j]
        out_c[i] = True
    return out_pts, out_t, out_c


def run_paths_generic(f, dom, starts, dt, sqrt_hdt, max_steps,
                      seed, path_offset):
    """Fallback for potentials or domains the tables cannot encode.

    Same stepping scheme, but the drift comes from f.grad_many and the
    membership test from the domain object, so bit-parity with the
    compiled kernel is not promised (determinism still is).
    """
    from .landscape.geometry import Interval

    starts = np.asarray(starts, dtype=np.float64)
    n, dim = starts.shape
    out_pts = np.empty((n, dim))
    out_t = np.full(n, max_steps * dt)
    out_c = np.zeros(n, dtype=bool)
    if n == 0:
        return out_pts, out_t, out_c

    if isinstance(dom, Interval):
        def inside_many(X):
            return (X[:, 0] > dom.a) & (X[:, 0] < dom.b)

        def gap(x):
            g1 = x[0] - dom.a
            g2 = dom.b - x[0]
            return g1 if g1 < g2 else g2
    else:
        def inside_many(X):
            return np.asarray(dom.contains_many(X), dtype=bool)

        def gap(x):
            return -dom.g.eval(x)

    def bisect(xp, xn):
        lo, hi, mid = 0.0, 1.0, 1.0
        xm, gm, it = xn, gap(xn), 0
        while abs(gm) >= BISECT_TOL and it < BISECT_MAX_ITER:
            mid = 0.5 * (lo + hi)
            xm = xp + mid * (xn - xp)
            gm = gap(xm)
            if gm > 0.0:
                lo = mid
            else:
                hi = mid
            it += 1
        if isinstance(dom, Interval):
            a, b = dom.a, dom.b
            xm = np.array([a if abs(xm[0] - a) <= abs(xm[0] - b) else b])
        return xm, mid

    gens = [np.random.Generator(np.random.Philox(key=[seed, path_offset + i]))
            for i in range(n)]
    X = starts.copy()
    alive = np.arange(n)
    k = 0
    while alive.size and k < max_steps:
        m = min(BLOCK_STEPS, max_steps - k)
        noise = np.stack([gens[i].standard_normal((BLOCK_STEPS, dim))
                          for i in alive])
        for kk in range(m):
            Xp = X
            G = np.atleast_2d(f.grad_many(Xp))
            X = (Xp - G * dt) + sqrt_hdt * noise[:, kk, :]
            inside = inside_many(X)
            if not inside.all():
                for j in np.flatnonzero(~inside):
                    i = alive[j]
                    pt, theta = bisect(Xp[j], X[j])
                    out_pts[i] = pt
                    out_t[i] = ((k + kk) + theta) * dt
                alive = alive[inside]
                X = X[inside]
                noise = noise[inside]
                if alive.size == 0:
                    break
        k += m

    for j, i in enumerate(alive):
        out_pts[i] = X[j]
        out_c[i] = True
    return out_pts, out_t, out_c
