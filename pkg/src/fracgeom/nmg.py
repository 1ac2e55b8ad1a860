"""Nonlocal minimal graphs in one dimension.

For u : R -> R equal to exterior data phi outside Omega = (a, b):

    A(u)   = int_Om int_Om Gcal((u(x) - u(y)) / |x-y|) |x-y|^{-s} dx dy
    N^M(u) = int_Om int_COm [2 Gcal(D) - Gcal((M + u(y)) / d) - Gcal((M - u(y)) / d)] d^{-s}
             + M Lambda L(Omega, C Omega)
    F^M    = A + N^M
    <H u, v> = int int G((u(x) - u(y)) / |x-y|) (v(x) - v(y)) |x-y|^{-1-s} dx dy

u is piecewise constant on cells of width h.  The real line is tiled by the
N cells of Omega, collar cells of width h carrying phi, geometrically growing
far cells carrying the tail value, and one unbounded cell on each side.  A
cell pair (i, j) enters with the exact weight W_ij = int_{I_i} int_{I_j}
|x-y|^{-1-s} and the slope (u_i - u_j) / d_ij taken at the center distance.
Self pairs carry a zero difference and drop out.  The discrete functional is
strictly convex and <H u, v> is exactly its directional derivative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg

from ._chords import chords, domain_interval
from ._crofton import crofton
from . import kernels
from .core import BoxDomain, FracParams, QuadSpec, Raster, Subgraph
from .curvature import kernel_antiderivatives, kernel_constants

__all__ = ["GridFunction1D", "MinimizeOptions", "MinimizeResult", "area_local",
           "area_nonlocal_truncated", "functional_FM", "hs_weak", "hs_gradient",
           "hs_hessian", "hs_pointwise", "minimize", "truncate_level", "rearrange_vertical",
           "raster_perimeter_difference", "seminorm", "sobolev_norm", "poincare_sides",
           "lipschitz_constant", "nonlocal_bound_constant", "area_lower_bound",
           "collar_sup", "el_residual"]

_FAR_RATIO = 1.5          # growth of the far cells
_FAR_REACH = 1e6          # far cells extend to this many diameters


@dataclass(frozen=True)
class GridFunction1D:
    """Cell values of u in Omega = (a, b) with exterior data on a collar.

    ``collar_left`` lists phi on the cells of (a - L, a) from left to right,
    ``collar_right`` on (b, b + L); both have ``L / h`` entries.  Beyond the
    collar u is 0 (``tail="zero"``) or continues the outermost collar value
    (``tail="bounded"``).
    """
    a: float
    b: float
    values: np.ndarray
    collar_left: np.ndarray
    collar_right: np.ndarray
    tail: str = "zero"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        cl = np.asarray(self.collar_left, dtype=float).ravel()
        cr = np.asarray(self.collar_right, dtype=float).ravel()
        if not self.b > self.a:
            raise ValueError("need a < b")
        if v.size < 8:
            raise ValueError("need at least 8 cells in Omega")
        if cl.size != cr.size or cl.size == 0:
            raise ValueError("collars must be nonempty and of equal length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(cl)) and np.all(np.isfinite(cr))):
            raise ValueError("values must be finite")
        if self.tail not in ("zero", "bounded"):
            raise ValueError("tail must be 'zero' or 'bounded'")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "collar_left", cl)
        object.__setattr__(self, "collar_right", cr)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def L(self) -> float:
        return self.collar_left.size * self.h

    @property
    def centers(self) -> np.ndarray:
        return self.a + (np.arange(self.N) + 0.5) * self.h

    @property
    def collar_centers(self):
        k = np.arange(self.collar_left.size) + 0.5
        return self.a - self.L + k * self.h, self.b + k * self.h

    def tail_values(self):
        if self.tail == "zero":
            return 0.0, 0.0
        return float(self.collar_left[0]), float(self.collar_right[-1])

    def with_values(self, values) -> "GridFunction1D":
        return replace(self, values=np.asarray(values, dtype=float))

    @classmethod
    def from_functions(cls, a, b, N, u, phi, theta=2.0, tail="zero"):
        """Sample u on Omega and phi on a collar of reach theta * (b - a)."""
        g = cls(a, b, np.zeros(N), np.zeros(1), np.zeros(1), tail)
        m = int(math.ceil(theta * N))
        k = np.arange(m) + 0.5
        xl = a - m * g.h + k * g.h
        xr = b + k * g.h
        return cls(a, b, np.asarray(u(g.centers), float) * np.ones(N),
                   np.asarray(phi(xl), float) * np.ones(m), np.asarray(phi(xr), float) * np.ones(m), tail)


@dataclass(frozen=True)
class MinimizeOptions:
    M: float = 0.0
    obstacle: np.ndarray | None = None     # psi on Omega cells, NaN where inactive
    armijo: float = 1e-4
    backtrack: float = 0.5
    tol: float = 1e-8
    max_iter: int = 200
    method: str = "newton"                 # or "gd"
    theta: float = 2.0

    def __post_init__(self):
        if not self.M >= 0:
            raise ValueError("M must be >= 0")
        if not (self.tol > 0 and 0 < self.armijo < 0.5 and 0 < self.backtrack < 1):
            raise ValueError("tolerances and step parameters out of range")
        if self.method not in ("newton", "gd"):
            raise ValueError("method must be 'newton' or 'gd'")
        if self.obstacle is not None:
            psi = np.asarray(self.obstacle, dtype=float)
            object.__setattr__(self, "obstacle", psi)
            act = psi[np.isfinite(psi)]
            if act.size and self.M < np.max(np.abs(act)):
                raise ValueError("M must be at least the sup norm of the obstacle")


@dataclass(frozen=True)
class MinimizeResult:
    u: GridFunction1D
    iterations: int
    F: float
    residual: np.ndarray
    converged: bool
    history: tuple = field(default=())


# ----------------------------------------------------------------------------
# geometry of the cell tiling

def _dpow(x, ell, e):
    """(x + ell)^e - x^e without cancellation, x >= 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = x ** e * np.expm1(e * np.log1p(ell / x))
    return np.where(x > 0, val, ell ** e)


def _pair_weights(x0, x1, y0, y1, s):
    """Exact int_{[x0,x1]} int_{[y0,y1]} |x-y|^{-1-s}, intervals with x1 <= y0.

    ``y1`` may be +inf.
    """
    e = 1.0 - s
    ell = x1 - x0
    near = _dpow(y0 - x1, ell, e)
    far = np.where(np.isinf(y1), 0.0, _dpow(np.where(np.isinf(y1), 1.0, y1 - x1), ell, e))
    return (near - far) / (s * e)


@dataclass(frozen=True)
class _Tiling:
    W_in: np.ndarray      # (N, N), zero diagonal
    D_in: np.ndarray
    W_ex: np.ndarray      # (N, K)
    D_ex: np.ndarray
    side: np.ndarray      # (K,) 0 left collar, 1 right collar, 2 left far, 3 right far
    S: np.ndarray         # row sums of W_ex = L(I_i, C Omega)


@lru_cache(maxsize=32)
def _tiling(a, b, N, m, s) -> _Tiling:
    h = (b - a) / N
    x0 = a + np.arange(N) * h
    x1 = x0 + h
    c = x0 + h / 2
    # interior pairs
    I, J = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    lo, hi = np.minimum(I, J), np.maximum(I, J)
    W_in = _pair_weights(x0[lo], x1[lo], x0[hi], x1[hi], s)
    np.fill_diagonal(W_in, 0.0)
    D_in = np.abs(c[:, None] - c[None, :])
    np.fill_diagonal(D_in, 1.0)
    # exterior cells as offsets from the boundary: [o0, o1] in [0, inf]
    k = np.arange(m)
    off0 = [k * h]
    off1 = [(k + 1) * h]
    start, size = m * h, h * _FAR_RATIO
    far0, far1 = [], []
    while start < _FAR_REACH * (b - a):
        far0.append(start)
        far1.append(start + size)
        start += size
        size *= _FAR_RATIO
    far0.append(start)
    far1.append(math.inf)
    o0 = np.concatenate([off0[0], far0])
    o1 = np.concatenate([off1[0], far1])
    # right cells [b + o0, b + o1]; left cells mirrored to [a - o1, a - o0]
    # reflect or shift each cell to [0, h]; dl, dr are its gaps to a and b
    dl = (x0 - a)[:, None]
    dr = (b - x1)[:, None]
    W_r = _pair_weights(np.zeros((N, 1)), np.full((N, 1), h), dr + h + o0[None], dr + h + o1[None], s)
    W_l = _pair_weights(np.zeros((N, 1)), np.full((N, 1), h), dl + h + o0[None], dl + h + o1[None], s)
    mid = np.where(np.isinf(o1), 2 * o0, 0.5 * (o0 + o1))
    D_r = (b - c)[:, None] + mid[None]
    D_l = (c - a)[:, None] + mid[None]
    nf = len(far0)
    side_l = np.concatenate([np.zeros(m), np.full(nf, 2)])
    side_r = np.concatenate([np.ones(m), np.full(nf, 3)])
    W_ex = np.concatenate([W_l, W_r], axis=1)
    D_ex = np.concatenate([D_l, D_r], axis=1)
    side = np.concatenate([side_l, side_r]).astype(np.int8)
    # left collar is stored from a - L to a; offsets run the other way
    order_l = np.concatenate([np.arange(m)[::-1], m + np.arange(nf)])
    W_ex[:, :m + nf] = W_l[:, order_l]
    D_ex[:, :m + nf] = D_l[:, order_l]
    S = W_ex.sum(axis=1)
    for arr in (W_in, D_in, W_ex, D_ex, side, S):
        arr.setflags(write=False)
    return _Tiling(W_in, D_in, W_ex, D_ex, side, S)


def _geom(u: GridFunction1D, s: float):
    T = _tiling(u.a, u.b, u.N, u.collar_left.size, float(s))
    nf = (T.side == 2).sum()
    tl, tr = u.tail_values()
    phi = np.concatenate([u.collar_left, np.full(nf, tl), u.collar_right, np.full(nf, tr)])
    return T, phi


def _p(s):
    return FracParams(1, s)


def _Gc(t, s):
    return kernel_antiderivatives(t, _p(s))[2]


# ----------------------------------------------------------------------------
# functionals

def area_local(u: GridFunction1D, params: FracParams) -> float:
    """Local part A(u, Omega) of the discretized area functional."""
    _check1(params)
    T, _ = _geom(u, params.s)
    du = u.values[:, None] - u.values[None, :]
    return float(np.sum(T.W_in * T.D_in * _Gc(du / T.D_in, params.s)))


def area_nonlocal_truncated(u: GridFunction1D, M: float, params: FracParams) -> float:
    """Truncated nonlocal part N^M(u, Omega); may be negative."""
    _check1(params)
    if not M >= 0:
        raise ValueError("M must be >= 0")
    s = params.s
    T, phi = _geom(u, s)
    Lam = kernel_constants(_p(s))[0]
    D = T.D_ex
    du = (u.values[:, None] - phi[None, :]) / D
    br = 2 * _Gc(du, s) - _Gc((M + phi[None, :]) / D, s) - _Gc((M - phi[None, :]) / D, s)
    return float(np.sum(T.W_ex * D * br) + M * Lam * T.S.sum())


def functional_FM(u: GridFunction1D, M: float, params: FracParams) -> float:
    """F^M(u, Omega) = A(u, Omega) + N^M(u, Omega)."""
    return area_local(u, params) + area_nonlocal_truncated(u, M, params)


def _check1(params):
    if params.n != 1:
        raise ValueError("graph functionals are implemented for n = 1")


def hs_gradient(u: GridFunction1D, params: FracParams) -> np.ndarray:
    """<H u, e_i> for every cell indicator e_i of Omega (the gradient of F^M)."""
    _check1(params)
    s = params.s
    T, phi = _geom(u, s)
    p = _p(s)
    G_in = kernel_antiderivatives((u.values[:, None] - u.values[None, :]) / T.D_in, p)[1]
    G_ex = kernel_antiderivatives((u.values[:, None] - phi[None, :]) / T.D_ex, p)[1]
    return 2 * (np.sum(T.W_in * G_in, axis=1) + np.sum(T.W_ex * G_ex, axis=1))


def hs_hessian(u: GridFunction1D, params: FracParams) -> np.ndarray:
    """Hessian of F^M in the cell values (symmetric positive definite)."""
    s = params.s
    T, phi = _geom(u, s)
    p = _p(s)
    g_in = kernel_antiderivatives((u.values[:, None] - u.values[None, :]) / T.D_in, p)[0]
    g_ex = kernel_antiderivatives((u.values[:, None] - phi[None, :]) / T.D_ex, p)[0]
    off = 2 * T.W_in * g_in / T.D_in
    H = -off
    H[np.diag_indices_from(H)] = off.sum(axis=1) + 2 * np.sum(T.W_ex * g_ex / T.D_ex, axis=1)
    return H


def hs_weak(u: GridFunction1D, v, params: FracParams) -> float:
    """Weak pairing <H u, v> for a test cell vector v on Omega (zero outside)."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != u.N:
        raise ValueError("test vector must have one value per cell of Omega")
    return float(hs_gradient(u, params) @ v)


def el_residual(u: GridFunction1D, params: FracParams) -> np.ndarray:
    """Euler-Lagrange residual <H u, e_i> / h."""
    return hs_gradient(u, params) / u.h


# ----------------------------------------------------------------------------
# seminorms and constants

def seminorm(u: GridFunction1D, s: float, region: str = "omega", v=None) -> float:
    """Discrete [w]_{W^{s,1}} of the cell function w.

    ``region="omega"``: pairs in Omega x Omega with w = u.values.
    ``region="line"``: all pairs of R x R for a vector ``v`` on Omega
    extended by zero.
    """
    T, _ = _geom(u, s)
    w = u.values if v is None else np.asarray(v, dtype=float)
    inner = float(np.sum(T.W_in * np.abs(w[:, None] - w[None, :])))
    if region == "omega":
        return inner
    if region == "line":
        return inner + 2 * float(np.sum(T.S * np.abs(w)))
    raise ValueError("region must be 'omega' or 'line'")


def sobolev_norm(u: GridFunction1D, s: float) -> float:
    """||u||_{W^{s,1}(Omega)} = ||u||_{L^1} + [u]_{W^{s,1}(Omega)}."""
    return float(np.sum(np.abs(u.values)) * u.h) + seminorm(u, s)


def lipschitz_constant(u: GridFunction1D, s: float) -> float:
    """C with |F^M(u) - F^M(v)| <= C Lambda ||u - v||_{W^{s,1}(Omega)} for u = v off Omega.

    On the grid, C = max(1/2, max_i L(I_i, C Omega) / h); it grows like
    h^{-s}, the discrete shadow of the fractional Hardy inequality.
    """
    T, _ = _geom(u, s)
    return max(0.5, float(np.max(T.S) / u.h))


def nonlocal_bound_constant(u: GridFunction1D, s: float) -> float:
    """C with |N^M(u)| <= C Lambda (||u||_{W^{s,1}(Omega)} + M)."""
    T, _ = _geom(u, s)
    return 2.0 * max(float(np.max(T.S) / u.h), float(T.S.sum()))


def area_lower_bound(u: GridFunction1D, params: FracParams) -> float:
    """(c_star / 2) ([u]_{W^{s,1}(Omega)} - c_s(Omega)), c_s = 2 |Omega|^{2-s} / (1-s)."""
    s = params.s
    cstar = kernel_constants(_p(s))[2]
    cs = 2.0 / (1 - s) * (u.b - u.a) ** (2 - s)
    return 0.5 * cstar * (seminorm(u, s) - cs)


def poincare_sides(u: GridFunction1D, s: float, outer):
    """Both sides of the fractional Poincare inequality on O = (outer[0], outer[1]).

    u vanishes outside Omega, O contains Omega and must end on collar cell
    boundaries.  Returns ``(||u||_{L^1(Omega)}, constant * double integral)``
    with constant ``(diam O)^{1+s} / |O minus Omega|``.
    """
    T, _ = _geom(u, s)
    lo, hi = map(float, outer)
    cl, cr = u.collar_centers
    h = u.h
    inside_l = (cl > lo) & (cl < u.a)
    inside_r = (cr > u.b) & (cr < hi)
    m = u.collar_left.size
    sel = np.zeros(T.W_ex.shape[1], dtype=bool)
    sel[:m] = inside_l
    nf = (T.side == 2).sum()
    sel[m + nf:m + nf + m] = inside_r
    ring = (inside_l.sum() + inside_r.sum()) * h
    if ring <= 0:
        raise ValueError("outer set must strictly contain Omega")
    lhs = float(np.sum(np.abs(u.values)) * h)
    rhs = (hi - lo) ** (1 + s) / ring * float(np.sum(np.abs(u.values) * T.W_ex[:, sel].sum(1)))
    return lhs, rhs


def collar_sup(u: GridFunction1D) -> float:
    """sup of the exterior data, tail included."""
    return float(max(u.collar_left.max(), u.collar_right.max(), *u.tail_values()))


# ----------------------------------------------------------------------------
# pointwise operator

def hs_pointwise(u, x: float, params: FracParams, quad: QuadSpec | None = None,
                 r: float = 1.0, slope_cap: float = 1e8):
    """H u(x) = PV int delta_g(u, x; xi) |xi|^{-1-s} dxi for a callable profile u.

    delta_g(u, x; xi) = G((u(x) - u(x+xi)) / |xi|) - G((u(x-xi) - u(x)) / |xi|)
    is even in xi, so H u(x) = 2 int_0^inf delta_g xi^{-1-s}.  On (0, r) the
    substitution xi = r eta^{1/(1-s)} removes the xi^{-s} growth; the far
    field (r, inf) is integrated directly and is bounded by (2/s) Lambda r^{-s}.

    Returns ``(value, abserr)``.
    """
    _check1(params)
    s = params.s
    p = _p(s)
    x = float(x)
    ux = float(u(x))
    # a slope blow-up near x makes the integrand non-integrable
    eps = 1e-6
    sl = (np.asarray(u(x + np.array([eps, -eps])), float) - ux) / eps
    if not np.all(np.isfinite(sl)) or np.max(np.abs(sl)) > slope_cap:
        raise ValueError("slope blow-up near x; profile is not C^{1,gamma} there")

    def delta(xi):
        Gp = kernel_antiderivatives((ux - float(u(x + xi))) / xi, p)[1]
        Gm = kernel_antiderivatives((float(u(x - xi)) - ux) / xi, p)[1]
        return float(Gp - Gm)

    def outer(xi):
        return delta(xi) * xi ** (-1 - s)

    # rounding in u(x + xi) - u(x) sets a noise floor near 1e-11 for O(1) data
    floor = 1e-11 * (1.0 + abs(ux))
    v1, e1 = integrate.quad(_inner_weight(delta, r, s), 0.0, 1.0, limit=200, epsabs=floor, epsrel=1e-12)
    v2, e2 = integrate.quad(outer, r, math.inf, limit=200, epsabs=floor, epsrel=1e-12)
    return 2 * (v1 + v2), 2 * (e1 + e2)


def _inner_weight(delta, r, s):
    """Integrand on (0, 1) after xi = r eta^m, m = 1 / (1 - s).

    xi^{-1-s} dxi = m r^{1-s} xi^{-1} d eta, so the integrand is
    m r^{1-s} delta(xi) / xi, bounded at eta = 0 since delta(xi) = O(xi)
    for C^{1,1} profiles.  Below xi0 = 1e-4 r rounding in u(x + xi) - u(x)
    would be amplified by 1 / xi^2, so delta is replaced there by the
    quadratic a xi + b xi^2 through its values at xi0 / 2 and xi0.
    """
    m = 1.0 / (1.0 - s)
    x0 = 1e-4 * r
    d1, d2 = delta(x0 / 2), delta(x0)
    a = (4 * d1 - d2) / x0
    b = 2 * (d2 - 2 * d1) / x0 ** 2

    def f(eta):
        if eta <= 0:
            return m * r ** (1 - s) * a
        xi = r * eta ** m
        q = a + b * xi if xi < x0 else delta(xi) / xi
        return m * r ** (1 - s) * q

    return f


# ----------------------------------------------------------------------------
# minimization

def _project(x, psi):
    if psi is None:
        return x
    return np.where(np.isfinite(psi), np.maximum(x, np.nan_to_num(psi, nan=-np.inf)), x)


def _kkt_residual(u, grad, psi, h, tol_contact):
    """Residual profile; on contact cells only the negative part counts."""
    r = grad / h
    if psi is None:
        return np.abs(r)
    contact = np.isfinite(psi) & (u <= np.nan_to_num(psi, nan=-np.inf) + tol_contact)
    return np.where(contact, np.maximum(-r, 0.0), np.abs(r))


def minimize(phi: GridFunction1D, params: FracParams, opts: MinimizeOptions | None = None,
             u0=None) -> MinimizeResult:
    """Minimize the discrete F^M over cell values in Omega with exterior data fixed.

    ``phi`` carries the exterior data (its interior values are the default
    start).  Newton steps with Armijo backtracking are used by default; with
    an obstacle the free cells take a Newton step and the iterate is
    projected onto u >= psi (projected Newton).  ``method="gd"`` uses steps
    preconditioned by the Hessian diagonal instead.

    Stops when the Euler-Lagrange residual max_i |<H u, e_i>| / h is at most
    ``opts.tol`` (on obstacle contact cells, when the residual is >= -tol).

    Raises
    ------
    ValueError
        Collar shorter than ``opts.theta * (b - a)``.
    RuntimeError
        Line search failure.  Hitting the iteration cap is reported through
        ``converged = False``.
    """
    _check1(params)
    opts = opts or MinimizeOptions()
    if phi.L < opts.theta * (phi.b - phi.a) * (1 - 1e-12):
        raise ValueError("collar reach must be at least theta * diam(Omega)")
    psi = opts.obstacle
    if psi is not None and psi.shape != (phi.N,):
        raise ValueError("obstacle must have one value per cell")
    M = opts.M
    u = phi.with_values(_project(phi.values if u0 is None else np.asarray(u0, float), psi))
    F = functional_FM(u, M, params)
    grad = hs_gradient(u, params)
    hist = [F]
    h = u.h
    eps_act = 1e-12
    for it in range(opts.max_iter + 1):
        res = _kkt_residual(u.values, grad, psi, h, eps_act)
        if np.max(res) <= opts.tol:
            return MinimizeResult(u, it, F, grad / h, True, tuple(hist))
        if it == opts.max_iter:
            break
        x = u.values
        free = np.ones(u.N, dtype=bool)
        if psi is not None:
            bound = np.isfinite(psi) & (x <= np.nan_to_num(psi, nan=-np.inf) + eps_act) & (grad > 0)
            free = ~bound
        if opts.method == "newton":
            H = hs_hessian(u, params)
            d = np.zeros(u.N)
            d[free] = -linalg.solve(H[np.ix_(free, free)], grad[free], assume_a="pos")
        else:
            dg = np.diag(hs_hessian(u, params))
            d = np.where(free, -grad / dg, 0.0)
        t = 1.0
        gmax = np.max(res)
        for _ in range(60):
            xn = _project(x + t * d, psi)
            un = u.with_values(xn)
            Fn = functional_FM(un, M, params)
            if Fn <= F + opts.armijo * float(grad @ (xn - x)):
                break
            # near the optimum F is flat to rounding; accept a step that
            # reduces the residual instead
            gn = hs_gradient(un, params)
            if abs(Fn - F) <= 1e-13 * max(1.0, abs(F)) and \
                    np.max(_kkt_residual(xn, gn, psi, h, eps_act)) < gmax:
                break
            t *= opts.backtrack
        else:
            raise RuntimeError("line search failed to decrease F^M")
        u, F = un, Fn
        grad = hs_gradient(u, params)
        hist.append(F)
    return MinimizeResult(u, opts.max_iter, F, grad / h, False, tuple(hist))


def truncate_level(u: GridFunction1D, N: float) -> GridFunction1D:
    """u^{(N)}: min(u, N) in Omega, the exterior data unchanged."""
    return u.with_values(np.minimum(u.values, N))


# ----------------------------------------------------------------------------
# vertical rearrangement

def _column_check(E: Raster, M):
    (x0, y0), (x1, y1) = E.window
    if abs(y0 + M) > 1e-12 * max(1, M) or abs(y1 - M) > 1e-12 * max(1, M):
        raise ValueError("raster window must span (-M, M) vertically")
    if not isinstance(E.exterior, Subgraph):
        raise ValueError("raster exterior must be a subgraph (the collar profile)")
    prof = E.exterior.profile(np.array([x0, x1]))
    if np.any(np.abs(prof) > M):
        raise ValueError("exterior profile must stay inside (-M, M)")


def rearrange_vertical(E: Raster, M: float):
    """Column measure function w_E and the rearranged subgraph raster E_star.

    Within Omega x (-M, M) each column of E is replaced by the cells below
    w_E = (occupied length in (-M, M)) - M.  Outside the window both sets
    coincide with the exterior subgraph.

    Returns ``(w, E_star)`` with w the per-column values.
    """
    _column_check(E, M)
    g = E.grid
    ny, nx = g.shape
    k = g.sum(axis=0)
    w = k * E.cell - M
    rows = np.arange(ny)[:, None]
    mask = rows < k[None, :]
    return w, Raster(E.origin, E.cell, mask, E.exterior)


def raster_perimeter_difference(E1, E2, Omega: BoxDomain, params: FracParams,
                                quad: QuadSpec | None = None):
    """Per_s(E1, Omega) - Per_s(E2, Omega) on common lines.

    Returns ``(per1, per2, diff, err1, err2, diff_err)``.
    """
    quad = quad or QuadSpec()
    s = np.array([params.s])
    c, r = Omega.bounding_circle()

    def fn(lines):
        w1, w2 = domain_interval(Omega, lines)
        out = []
        for E in (E1, E2):
            loc, non = kernels.perimeter_forms(chords(E, lines), w1, w2, s, True)
            out.append(loc + non)
        return np.concatenate([out[0], out[1], out[0] - out[1]], axis=1)

    mean, err, _ = crofton(fn, c, r * 1.0000001, quad)
    return tuple(float(v) for v in mean) + tuple(float(v) for v in err)
