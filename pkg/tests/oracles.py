"""Independent numerical oracles shared by the test suite.

Everything here is computed from potential/domain *evaluations only* (finite
differences, dense scans, brute-force graph enumeration), never through the
library code paths under test.
"""

import itertools
import math

import numpy as np
from scipy.optimize import minimize_scalar


def fd_grad(f, x, h=5e-6):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f.eval(x + e) - f.eval(x - e)) / (2 * h)
    return out


def fd_hess_eval(f, x, h=5e-5):
    """Hessian from eval alone (second central differences)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    out = np.empty((d, d))
    f0 = f.eval(x)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        out[i, i] = (f.eval(x + ei) - 2 * f0 + f.eval(x - ei)) / h**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h
            out[i, j] = out[j, i] = (
                f.eval(x + ei + ej) - f.eval(x + ei - ej)
                - f.eval(x - ei + ej) + f.eval(x - ei - ej)) / (4 * h**2)
    return out


def fd_hess_grad(f, x, h=5e-6):
    """Hessian as finite differences of the analytic gradient."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    out = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        out[:, j] = (f.grad(x + e) - f.grad(x - e)) / (2 * h)
    return out


# ---------------------------------------------------------------------------
# circle-boundary oracles
# ---------------------------------------------------------------------------

def circle_value(f, R, theta, center=(0.0, 0.0)):
    th = np.atleast_1d(theta)
    pts = np.stack([center[0] + R * np.cos(th), center[1] + R * np.sin(th)], axis=1)
    v = f.eval_many(pts)
    return v[0] if np.isscalar(theta) else v


def circle_second_arc_derivative(f, R, theta, h=1e-4):
    """d^2 f / ds^2 along the circle via FD in theta: F''(theta)/R^2."""
    F = lambda t: circle_value(f, R, t)
    fpp = (F(theta + h) - 2 * F(theta) + F(theta - h)) / h**2
    return fpp / R**2


def circle_minima(f, R, n=8192, center=(0.0, 0.0)):
    """All local minima of f on the circle: list of (theta, value), refined."""
    th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    v = circle_value(f, R, th, center)
    out = []
    for i in range(n):
        if v[i] < v[i - 1] and v[i] < v[(i + 1) % n]:
            lo, hi = th[i] - 2 * np.pi / n, th[i] + 2 * np.pi / n
            res = minimize_scalar(lambda t: circle_value(f, R, t, center),
                                  bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-13})
            out.append((res.x % (2 * np.pi), float(res.fun)))
    return sorted(out)


# ---------------------------------------------------------------------------
# brute-force minimax barrier on small grids
# ---------------------------------------------------------------------------

def minimax_barrier_enumerate(values, edges, start, targets):
    """Exact minimax path cost by enumerating all simple paths.

    Only usable on tiny graphs.  Edge cost max(values[u], values[v]); path
    cost is the max edge cost; minimized over all simple paths from start
    to any target node.
    """
    adj = {}
    for u, v in edges:
        adj.setdefault(int(u), []).append(int(v))
        adj.setdefault(int(v), []).append(int(u))
    targets = set(int(t) for t in targets)
    best = [math.inf]

    def walk(node, cost, seen):
        if cost >= best[0]:
            return
        if node in targets:
            best[0] = cost
            return
        for nxt in adj.get(node, ()):
            if nxt in seen:
                continue
            c = max(cost, max(values[node], values[nxt]))
            if c < best[0]:
                walk(nxt, c, seen | {nxt})

    walk(int(start), values[int(start)], {int(start)})
    return best[0]


def minimax_barrier_unionfind(values, edges, start, targets):
    """Exact minimax path cost by a sorted-threshold union-find sweep.

    Kruskal-style: activate edges in increasing cost order until start and
    a target merge; exact on any finite graph.
    """
    n = len(values)
    parent = list(range(n + 1))        # extra node n = merged target sink

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for t in targets:
        union(int(t), n)
    costed = sorted((max(values[int(u)], values[int(v)]), int(u), int(v))
                    for u, v in edges)
    start = int(start)
    if find(start) == find(n):
        return values[start]
    for c, u, v in costed:
        union(u, v)
        if find(start) == find(n):
            return max(c, values[start])
    return math.inf


def flood_component(values, edges, level, seed):
    """Connected component of {values < level} containing seed (node ids)."""
    ok = values < level
    seed = int(seed)
    if not ok[seed]:
        raise ValueError("seed not below level")
    adj = {}
    for u, v in edges:
        u, v = int(u), int(v)
        if ok[u] and ok[v]:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
    seen = {seed}
    stack = [seed]
    while stack:
        u = stack.pop()
        for w in adj.get(u, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def interval_minima(f, a, b, n=20001):
    """Local minima of a 1D potential on [a, b]: list of (x, value)."""
    xs = np.linspace(a, b, n)
    v = f.eval_many(xs[:, None])
    out = []
    for i in range(1, n - 1):
        if v[i] < v[i - 1] and v[i] < v[i + 1]:
            res = minimize_scalar(lambda x: f.eval([x]),
                                  bounds=(xs[i - 1], xs[i + 1]), method="bounded",
                                  options={"xatol": 1e-13})
            out.append((float(res.x), float(res.fun)))
    return out


def exit_probability_1d_quadrature(f, a, b, x, h, dps=40):
    """Exit probability at the left endpoint by high-precision quadrature.

    Scale-function identity: P_x[hit a before b] = int_x^b e^{2f/h} over
    int_a^b e^{2f/h}.  The common factor e^{2 max f / h} is divided out
    exactly (it cancels in the ratio), and each piece is integrated with
    mpmath's tanh-sinh rule at `dps` digits, split at every local maximum
    of f so the spikes sit on segment endpoints.  Entirely independent of
    the library's adaptive-quadrature route.
    """
    import mpmath as mp

    def fx(t):
        return float(f.eval(np.array([float(t)])))

    ts = np.linspace(a, b, 4001)
    vs = f.eval_many(ts[:, None])
    m = float(vs.max())
    peaks = [float(ts[i]) for i in range(1, len(ts) - 1)
             if vs[i] >= vs[i - 1] and vs[i] >= vs[i + 1]]

    with mp.workdps(dps):
        two_over_h = mp.mpf(2.0) / mp.mpf(float(h))

        def w(t):
            return mp.exp(two_over_h * (mp.mpf(fx(t)) - mp.mpf(m)))

        def segment(lo, hi):
            knots = [lo] + [p for p in peaks if lo < p < hi] + [hi]
            return mp.quad(w, knots)

        upper = segment(float(x), float(b))
        lower = segment(float(a), float(x))
        return float(upper / (lower + upper))


def wilson_interval_roots(k, n, z):
    """Wilson score interval as the roots of its defining quadratic.

    p is in the interval iff (phat - p)^2 <= z^2 p(1-p)/n; solving the
    equality for p gives the endpoints directly.
    """
    ph = k / n
    a = 1.0 + z * z / n
    b = -(2.0 * ph + z * z / n)
    c = ph * ph
    disc = b * b - 4.0 * a * c
    root = np.sqrt(max(disc, 0.0))
    return ((-b - root) / (2.0 * a), (-b + root) / (2.0 * a))


def weighted_line_fit(x, y, sigma):
    """Slope/stderr of a straight line by explicit normal equations."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = 1.0 / np.maximum(np.asarray(sigma, dtype=float), 1e-12) ** 2
    A = np.stack([x, np.ones_like(x)], axis=1)
    # solve (A^T W A) beta = A^T W y
    AtW = A.T * w
    beta = np.linalg.solve(AtW @ A, AtW @ y)
    cov = np.linalg.inv(AtW @ A)
    return float(beta[0]), float(np.sqrt(cov[0, 0]))


def tridiag_smallest_eigenvalues(diag, off, k=2, dps=60):
    """Smallest k eigenvalues of a symmetric tridiagonal matrix.

    Sturm-sequence bisection in arbitrary precision: the LDL^T pivot
    recurrence q_i = d_i - x - e_{i-1}^2/q_{i-1} counts eigenvalues below x
    by its negative pivots, so each eigenvalue is bracketed and bisected
    without any iterative solve.  Resolves eigenvalues far below the double
    rounding floor of the matrix norm.
    """
    import mpmath as mp

    with mp.workdps(dps):
        d = [mp.mpf(v) for v in diag]
        e = [mp.mpf(v) for v in off]
        n = len(d)
        assert len(e) == n - 1

        def count_below(x):
            cnt = 0
            q = d[0] - x
            if q < 0:
                cnt += 1
            for i in range(1, n):
                if q == 0:
                    q = mp.mpf(10) ** (-2 * dps)
                q = d[i] - x - e[i - 1] ** 2 / q
                if q < 0:
                    cnt += 1
            return cnt

        hi0 = max(abs(v) for v in d) + 2 * max(abs(v) for v in e)
        out = []
        for j in range(1, k + 1):
            lo, hi = mp.mpf(0), hi0
            # locate the j-th smallest: count_below(hi) >= j always
            for _ in range(dps * 7):
                mid = (lo + hi) / 2
                if count_below(mid) >= j:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < abs(hi) * mp.mpf(10) ** (-dps + 8):
                    break
            out.append(float((lo + hi) / 2))
        return out
