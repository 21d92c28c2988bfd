"""Grid solves for exit expectations and quasi-stationary exit laws.

The generator L = -(h/2)·Laplacian + grad(f)·grad is discretized on a tagged
lattice as a weighted graph Laplacian: each axis-a edge (u, v) carries the
conductance

    c_uv = (h/2) · exp(-(f(u)+f(v))/h) · cell_volume / spacing_a**2

and each node the weight w_u = exp(-2 f(u)/h) · cell_volume, making W^-1 A
self-adjoint in the inner product <x, y>_w = sum x y w.  One assembly serves
three consumers: Dirichlet boundary-value solves (conjugate gradient on the
diagonally scaled interior block, direct sparse factorization as a fallback),
the principal/second eigenpair by inverse power iteration on the similarity
W^{-1/2} A W^{-1/2} (whose entries involve only f-differences of NEIGHBORING
nodes and so stay representable long after the raw weights underflow), and
the quasi-stationary distribution nu ∝ u·w with its exit law.

Exponentials are shifted by min f per assembly.  Node weights still underflow
once (max f - min f)/h exceeds ~350; on the default grids this keeps h above
roughly 0.02, and assembly rejects anything smaller.  One-dimensional
eigenpairs run in adaptive arbitrary precision (tridiagonal solves): a
metastable eigenvalue scales like exp(-2·barrier/h) while rounding the
matrix entries at machine epsilon already perturbs it by ~eps·||B||, so no
fixed-precision representation can resolve it at the smallest h of interest.
"""

import csv
import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceFailure, EmptySet, SolverDiverged
from .landscape.geometry import project_to_boundary

CG_MAX_ITER = 100_000
POWER_MAX_ITER = 10_000
HARMONIC_TOL = 1e-10
EIGEN_TOL = 1e-8
# Above this value of 2·span(f)/h the conditioning makes CG iterates carry
# O(kappa)·residual forward error, so the solve goes straight to the
# factorization (measured: CG matches the direct solve at 18, loses three
# digits to it at 36).
CG_HARDNESS = 25.0


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightedOperator:
    """Symmetric conductance form of the generator on a tagged grid."""

    grid: object
    h: float
    fshift: float             # min f over grid nodes; exponentials shifted by it
    f_nodes: np.ndarray       # f at interior then boundary nodes
    w: np.ndarray             # shifted node weights, interior nodes
    laplacian: sp.csr_matrix  # full assembly over interior + boundary nodes

    @property
    def n_interior(self):
        return self.grid.n_interior

    @property
    def interior_matrix(self):
        ni = self.n_interior
        return self.laplacian[:ni, :ni].tocsr()

    @property
    def boundary_coupling(self):
        ni = self.n_interior
        return self.laplacian[:ni, ni:].tocsr()


def assemble(f, grid, h):
    """Build the weighted-Laplacian form of the generator at temperature h."""
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    fn = grid.node_value_array(f)
    fshift = float(fn.min())
    vol = grid.cell_volume
    ni, nb = grid.n_interior, grid.n_boundary
    w = np.exp(-2.0 * (fn[:ni] - fshift) / h) * vol
    if np.any(w == 0.0):
        raise ValueError(
            f"node weights underflow at h={h} (f spans "
            f"{float(fn.max()) - fshift:.3g}); raise h — the default grids "
            f"support h >= 0.02")

    n = ni + nb
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    for axis in range(grid.dim):
        scale = (h / 2.0) * vol / float(grid.spacing[axis]) ** 2
        edge_sets = [grid.interior_edges_by_axis()[axis],
                     grid.dirichlet_edges_by_axis()[axis]]
        for a, b in edge_sets:
            if a.size == 0:
                continue
            c = scale * np.exp(-(fn[a] + fn[b] - 2.0 * fshift) / h)
            rows.extend((a, b))
            cols.extend((b, a))
            vals.extend((-c, -c))
            np.add.at(diag, a, c)
            np.add.at(diag, b, c)
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    lap = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n)).tocsr()
    return WeightedOperator(grid, float(h), fshift, fn, w, lap)


# ---------------------------------------------------------------------------
# Dirichlet boundary-value solve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicSolution:
    grid: object
    values: np.ndarray    # interior nodes, compact order
    boundary: np.ndarray  # Dirichlet data at boundary nodes
    residual: float       # relative residual of the diagonally
                          # preconditioned system ||(Av-b)/d|| / ||b/d||
    iterations: int
    method: str           # "cg" or "direct"

    def value_at(self, x):
        return float(self.values[self.grid.nearest_interior(x)])


def _boundary_values(grid, F):
    if callable(F):
        return np.array([float(F(c)) for c in grid.boundary_coords])
    Fb = np.asarray(F, dtype=float)
    if Fb.shape != (grid.n_boundary,):
        raise ValueError(f"boundary data must have shape "
                         f"({grid.n_boundary},), got {Fb.shape}")
    return Fb


def solve_harmonic(f, grid, h, F):
    """Solve L v = 0 on the interior with v = F on the boundary nodes.

    F is either a callable evaluated at boundary-node coordinates or an
    array over the boundary nodes in compact order.
    """
    return _solve_with_operator(assemble(f, grid, h), F)


def _solve_with_operator(op, F):
    grid = op.grid
    Fb = _boundary_values(grid, F)
    A = op.interior_matrix
    b = -(op.boundary_coupling @ Fb)

    d = A.diagonal()
    nb = float(np.linalg.norm(b / d))
    if nb == 0.0:
        return HarmonicSolution(grid, np.zeros(op.n_interior), Fb,
                                0.0, 0, "cg")

    def residual(v):
        return float(np.linalg.norm((A @ v - b) / d)) / nb

    n_it = 0

    def count(_):
        nonlocal n_it
        n_it += 1

    v, res, method = None, math.inf, "direct"
    span = float(op.f_nodes.max()) - op.fshift
    if 2.0 * span / op.h <= CG_HARDNESS:
        s = 1.0 / np.sqrt(d)
        S = sp.diags(s)
        x, _ = spla.cg((S @ A @ S).tocsr(), s * b,
                       x0=float(Fb.mean()) * np.sqrt(d), rtol=HARMONIC_TOL,
                       atol=0.0, maxiter=CG_MAX_ITER, callback=count)
        v = s * x
        res, method = residual(v), "cg"
    if not res < HARMONIC_TOL:
        if grid.dim == 1 and _is_path(grid):
            # hard 1D systems solve exactly in extended precision; the
            # float64 factorization would keep O(kappa·eps) forward error
            v_direct, res_direct = _harmonic_tridiag_mp(op, Fb)
        else:
            v_direct = spla.splu(A.tocsc()).solve(b)
            res_direct = residual(v_direct)
        if res_direct < res:
            v, res, method = v_direct, res_direct, "direct"
        if not res < HARMONIC_TOL:
            raise SolverDiverged(
                f"boundary-value solve stalled at residual {res:.3g} "
                f"(target {HARMONIC_TOL})")
    return HarmonicSolution(grid, v, Fb, res, n_it, method)


def _harmonic_tridiag_mp(op, Fb):
    """Thomas solve of the 1D interior system in working precision
    required_dps; returns float64 values and their residual (evaluated in
    the same precision, so the metric sees only the final rounding)."""
    grid = op.grid
    ni = op.n_interior
    with mp.workdps(required_dps(op)):
        h, fs = mp.mpf(op.h), mp.mpf(op.fshift)
        cA = (mp.mpf(op.h) / 2 * mp.mpf(grid.cell_volume)
              / mp.mpf(float(grid.spacing[0])) ** 2)
        fn = [mp.mpf(float(x)) for x in op.f_nodes]
        ii, jj = grid.interior_edges_by_axis()[0]
        e = [-(cA * mp.exp(-(fn[a] + fn[b] - 2 * fs) / h))
             for a, b in zip(ii, jj)]
        diag = [mp.mpf(0)] * ni
        for k, (a, b) in enumerate(zip(ii, jj)):
            diag[a] -= e[k]
            diag[b] -= e[k]
        rhs = [mp.mpf(0)] * ni
        di, db = grid.dirichlet_edges_by_axis()[0]
        for a, b in zip(di, db):
            c = cA * mp.exp(-(fn[a] + fn[b] - 2 * fs) / h)
            diag[a] += c
            rhs[a] += c * mp.mpf(float(Fb[b - ni]))
        dp_piv, mult = _mp_factor(diag, e)
        sol = _mp_solve(dp_piv, mult, e, rhs)
        v = np.array([float(x) for x in sol])

        def at(k):
            out = diag[k] * mp.mpf(v[k])
            if k > 0:
                out += e[k - 1] * mp.mpf(v[k - 1])
            if k < ni - 1:
                out += e[k] * mp.mpf(v[k + 1])
            return out

        num = _mp_norm([(at(k) - rhs[k]) / diag[k] for k in range(ni)])
        den = _mp_norm([rhs[k] / diag[k] for k in range(ni)])
        res = float(num / den)
    return v, res


def leveling_oscillation(sol, nodes):
    """max |v(x) - v(y)| over a set of interior node ids."""
    ids = np.asarray(list(nodes), dtype=np.int64)
    if ids.size == 0:
        raise EmptySet("no nodes in the oscillation window")
    vals = sol.values[ids]
    return float(vals.max() - vals.min())


# ---------------------------------------------------------------------------
# principal eigenpair and the quasi-stationary distribution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Eigenpair:
    lambda_h: float
    lambda_2: float       # second eigenvalue estimate (deflated iteration)
    u: np.ndarray         # principal vector, interior nodes, sum(u^2 w) = 1
    nu: np.ndarray        # quasi-stationary mass per interior node, sums to 1
    Z_h: float
    log_Z_h: float
    residual: float       # achieved ||L u - lambda u||_w for the principal pair
    iterations: tuple     # (principal, second)

    def to_dict(self):
        return {"lambda_h": self.lambda_h, "lambda_2": self.lambda_2,
                "Z_h": self.Z_h, "log_Z_h": self.log_Z_h,
                "residual": self.residual,
                "iterations": list(self.iterations)}


def _edge_arrays(op, dtype):
    """(i, j, c) for every assembly edge; j >= n_interior means boundary."""
    grid, fn, h = op.grid, op.f_nodes, op.h
    fs = dtype(op.fshift)
    fd = fn.astype(dtype)
    vol = grid.cell_volume
    ii, jj, cc = [], [], []
    for axis in range(grid.dim):
        scale = (h / 2.0) * vol / float(grid.spacing[axis]) ** 2
        for a, b in (grid.interior_edges_by_axis()[axis],
                     grid.dirichlet_edges_by_axis()[axis]):
            if a.size == 0:
                continue
            ii.append(a)
            jj.append(b)
            cc.append(scale * np.exp(-(fd[a] + fd[b] - 2 * fs) / dtype(h)))
    return (np.concatenate(ii), np.concatenate(jj), np.concatenate(cc))


def _norm(v):
    return np.sqrt(np.dot(v, v))


def _inverse_iterate(solve, matvec, rayleigh, y0, deflate=None,
                     cap=POWER_MAX_ITER, tol=EIGEN_TOL):
    """Power iteration on the inverse; returns (y, lam, residual, its).

    Stops at residual < tol*lam when the floating floor allows it, otherwise
    at stagnation (no 10% improvement over 12 sweeps) with the best iterate.
    """
    y = y0 / _norm(y0)
    if deflate is not None:
        y = y - np.dot(deflate, y) * deflate
        y = y / _norm(y)
    best = None
    since_improve = 0
    for it in range(1, cap + 1):
        z = solve(y)
        if deflate is not None:
            z = z - np.dot(deflate, z) * deflate
        y = z / _norm(z)
        lam = rayleigh(y)
        r = float(_norm(matvec(y) - lam * y))
        if best is None or r < 0.9 * best[0]:
            best = (r, lam, y)
            since_improve = 0
        else:
            if r < best[0]:
                best = (r, lam, y)
            since_improve += 1
        if r < tol * lam:
            return y, lam, r, it
        if since_improve >= 12:
            r, lam, y = best
            return y, lam, r, it
    raise ConvergenceFailure(
        f"inverse power iteration: {cap} iterations without convergence "
        f"(residual {best[0]:.3g}, lambda {best[1]:.3g})")


def _finish_eigenpair(op, w_t, y1, lam1, r1, it1, lam2, it2):
    """Assemble the Eigenpair from frame vectors of either precision."""
    h, fs = op.h, op.fshift
    u_t = y1 / np.sqrt(w_t)                # sum(u_t^2 w_t) = 1 by ||y1|| = 1
    if not bool((u_t > 0).all()):
        raise ConvergenceFailure("principal vector lost strict positivity")
    mass = u_t * w_t
    total = mass.sum()
    nu = (mass / total).astype(np.float64)
    log_Z = float(np.log(total)) - fs / h
    try:
        Z = math.exp(log_Z)
    except OverflowError:
        Z = math.inf
    try:
        u_phys = u_t.astype(np.float64) * math.exp(fs / h)
    except OverflowError:
        u_phys = u_t.astype(np.float64) * math.inf
    return Eigenpair(float(lam1), float(lam2), u_phys, nu, Z, log_Z,
                     float(r1), (it1, it2))


def principal_eigenpair(op):
    """Principal Dirichlet eigenpair by inverse power iteration.

    Starts from the positive vector exp(-f/h); the second eigenvalue comes
    from a deflated iteration started at a fixed-seed random vector and
    re-orthogonalized after every solve (the solve amplifies the principal
    component by lambda_2/lambda_1 per sweep, exponentially large here).
    """
    if op.grid.dim == 1 and _is_path(op.grid):
        return _eigenpair_tridiag(op)
    return _eigenpair_sparse(op)


def _is_path(grid):
    ii, jj = grid.interior_edges_by_axis()[0]
    return (np.array_equal(ii, np.arange(grid.n_interior - 1))
            and np.array_equal(jj, ii + 1))


def required_dps(op):
    """Working digits for the 1D eigensolve.

    The Thomas pivots cancel down to the lambda_1/||B|| ratio, which costs
    2·range(f)/(h·ln 10) digits; 30 more cover the residual certificate.
    """
    span = float(op.f_nodes.max()) - op.fshift
    return 30 + int(2.0 * span / (op.h * math.log(10.0)))


def _tridiag_entries(op):
    """(diag, off) of the symmetrized interior block as mp numbers.

    Built from neighbor f-differences; must be called inside a workdps
    context.
    """
    grid = op.grid
    ni = op.n_interior
    coef = mp.mpf(op.h) / 2 / mp.mpf(float(grid.spacing[0])) ** 2
    h = mp.mpf(op.h)
    fn = [mp.mpf(float(v)) for v in op.f_nodes]
    nbr = [[] for _ in range(ni)]
    ii, jj = grid.interior_edges_by_axis()[0]
    for a, b in zip(ii, jj):
        nbr[a].append(b)
        nbr[b].append(a)
    di, db = grid.dirichlet_edges_by_axis()[0]
    for a, b in zip(di, db):
        nbr[a].append(b)
    diag = [coef * mp.fsum(mp.exp((fn[k] - fn[j]) / h) for j in nbr[k])
            for k in range(ni)]
    return diag, -coef


def _mp_factor(d, e):
    dp = [d[0]]
    m = []
    for i in range(1, len(d)):
        mi = e[i - 1] / dp[-1]
        m.append(mi)
        dp.append(d[i] - mi * e[i - 1])
    return dp, m


def _mp_solve(dp, m, e, b):
    n = len(b)
    y = list(b)
    for i in range(n - 1):
        y[i + 1] -= m[i] * y[i]
    x = [None] * n
    x[-1] = y[-1] / dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = (y[i] - e[i] * x[i + 1]) / dp[i]
    return x


def _mp_norm(v):
    return mp.sqrt(mp.fsum(x * x for x in v))


def _mp_iterate(solve, matvec, rayleigh, y0, deflate=None,
                cap=POWER_MAX_ITER, tol=EIGEN_TOL):
    """The _inverse_iterate loop in mp arithmetic."""
    def normalize(v):
        nv = _mp_norm(v)
        return [x / nv for x in v]

    def orth(v):
        c = mp.fsum(a * b for a, b in zip(deflate, v))
        return [x - c * d for x, d in zip(v, deflate)]

    y = normalize(y0 if deflate is None else orth(y0))
    best = None
    since_improve = 0
    for it in range(1, cap + 1):
        z = solve(y)
        if deflate is not None:
            z = orth(z)
        y = normalize(z)
        lam = rayleigh(y)
        By = matvec(y)
        r = _mp_norm([a - lam * b for a, b in zip(By, y)])
        if best is None or r < mp.mpf("0.9") * best[0]:
            best = (r, lam, y)
            since_improve = 0
        else:
            if r < best[0]:
                best = (r, lam, y)
            since_improve += 1
        if r < tol * lam:
            return y, lam, r, it
        if since_improve >= 12:
            r, lam, y = best
            return y, lam, r, it
    raise ConvergenceFailure(
        f"inverse power iteration: {cap} iterations without convergence "
        f"(residual {float(best[0]):.3g}, lambda {float(best[1]):.3g})")


def _eigenpair_tridiag(op):
    grid = op.grid
    ni = op.n_interior
    with mp.workdps(required_dps(op)):
        diag, off = _tridiag_entries(op)
        h, fs = mp.mpf(op.h), mp.mpf(op.fshift)
        vol = mp.mpf(grid.cell_volume)
        fn = [mp.mpf(float(v)) for v in op.f_nodes]
        w_t = [mp.exp(-2 * (fn[k] - fs) / h) * vol for k in range(ni)]
        sw = [mp.sqrt(x) for x in w_t]

        cA = mp.mpf(op.h) / 2 * vol / mp.mpf(float(grid.spacing[0])) ** 2
        edges = []                       # (i, j_or_None, conductance)
        ii, jj = grid.interior_edges_by_axis()[0]
        for a, b in zip(ii, jj):
            edges.append((int(a), int(b),
                          cA * mp.exp(-(fn[a] + fn[b] - 2 * fs) / h)))
        di, db = grid.dirichlet_edges_by_axis()[0]
        for a, b in zip(di, db):
            edges.append((int(a), None,
                          cA * mp.exp(-(fn[a] + fn[b] - 2 * fs) / h)))

        def rayleigh(y):
            u = [a / b for a, b in zip(y, sw)]
            return mp.fsum(
                c * (u[i] - (u[j] if j is not None else 0)) ** 2
                for i, j, c in edges)

        def matvec(y):
            out = [d * v for d, v in zip(diag, y)]
            for i in range(ni - 1):
                out[i] += off * y[i + 1]
                out[i + 1] += off * y[i]
            return out

        offs = [off] * (ni - 1)
        dp_piv, mult = _mp_factor(diag, offs)

        def solve(b):
            return _mp_solve(dp_piv, mult, offs, b)

        y0 = [s * mp.exp(-(fn[k] - fs) / h) for k, s in enumerate(sw)]
        y1, lam1, r1, it1 = _mp_iterate(solve, matvec, rayleigh, y0)
        if mp.fsum(y1) < 0:
            y1 = [-v for v in y1]
        rng = np.random.default_rng(7081)
        y0b = [mp.mpf(v) for v in rng.standard_normal(ni)]
        _, lam2, _, it2 = _mp_iterate(solve, matvec, rayleigh, y0b,
                                      deflate=y1)

        u_t = [a / b for a, b in zip(y1, sw)]
        if any(v <= 0 for v in u_t):
            raise ConvergenceFailure("principal vector lost strict positivity")
        mass = [a * b for a, b in zip(u_t, w_t)]
        total = mp.fsum(mass)
        nu = np.array([float(v / total) for v in mass])
        log_Z = float(mp.log(total) - fs / h)
        scale = mp.exp(fs / h)
        u_phys = np.array([float(v * scale) for v in u_t])
    try:
        Z = math.exp(log_Z)
    except OverflowError:
        Z = math.inf
    return Eigenpair(float(lam1), float(lam2), u_phys, nu, Z, log_Z,
                     float(r1), (it1, it2))


def _eigenpair_sparse(op):
    grid = op.grid
    ni = op.n_interior
    nb = grid.n_boundary
    fn = op.f_nodes
    h = op.h
    ii, jj, cc = _edge_arrays(op, np.float64)
    pad = np.zeros(nb)

    # symmetrized B = W^{-1/2} A W^{-1/2}: constant off-diagonals per axis,
    # diagonal built from neighbor f-differences only
    rows, cols, vals = [], [], []
    diag = np.zeros(ni)
    for axis in range(grid.dim):
        coef = (h / 2.0) / float(grid.spacing[axis]) ** 2
        ai, aj = grid.interior_edges_by_axis()[axis]
        if ai.size:
            rows.extend((ai, aj))
            cols.extend((aj, ai))
            vals.extend((np.full(ai.size, -coef), np.full(ai.size, -coef)))
            np.add.at(diag, ai, coef * np.exp((fn[ai] - fn[aj]) / h))
            np.add.at(diag, aj, coef * np.exp((fn[aj] - fn[ai]) / h))
        di, db = grid.dirichlet_edges_by_axis()[axis]
        if di.size:
            np.add.at(diag, di, coef * np.exp((fn[di] - fn[db]) / h))
    rows.append(np.arange(ni))
    cols.append(np.arange(ni))
    vals.append(diag)
    B = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ni, ni)).tocsr()

    w_t = op.w
    sw = np.sqrt(w_t)

    def rayleigh(y):
        uf = np.concatenate([y / sw, pad])
        return float((cc * (uf[ii] - uf[jj]) ** 2).sum())

    lu = spla.splu(B.tocsc())
    y0 = sw * np.exp(-(fn[:ni] - op.fshift) / h)
    y1, lam1, r1, it1 = _inverse_iterate(lu.solve, B.dot, rayleigh, y0)
    if y1.sum() < 0:
        y1 = -y1
    rng = np.random.default_rng(7081)
    _, lam2, _, it2 = _inverse_iterate(lu.solve, B.dot, rayleigh,
                                       rng.standard_normal(ni), deflate=y1)
    return _finish_eigenpair(op, w_t, y1, lam1, r1, it1, lam2, it2)


# ---------------------------------------------------------------------------
# quasi-stationary exit law
# ---------------------------------------------------------------------------

def qsd_exit_law(f, grid, h, eigenpair, regions):
    """Exit-region probabilities when the start is drawn from the QSD.

    Each region gets a Dirichlet solve with its indicator as boundary data
    (boundary nodes are identified with their projection onto the true
    domain boundary); the law is the nu-average of that solution.
    """
    op = assemble(f, grid, h)
    pts = [project_to_boundary(grid.dom, c) for c in grid.boundary_coords]
    out = []
    for reg in regions:
        Fb = np.array([1.0 if reg.contains(p) else 0.0 for p in pts])
        sol = _solve_with_operator(op, Fb)
        out.append(float(eigenpair.nu @ sol.values))
    return out


def write_solution(sol, path):
    """Node-value table: one row per node, coordinates then value."""
    grid = sol.grid
    with open(path, "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow([f"x{i}" for i in range(grid.dim)] + ["value"])
        for coords, val in zip(grid.interior_coords, sol.values):
            wtr.writerow([repr(float(c)) for c in coords]
                         + [repr(float(val))])
        for coords, val in zip(grid.boundary_coords, sol.boundary):
            wtr.writerow([repr(float(c)) for c in coords]
                         + [repr(float(val))])
