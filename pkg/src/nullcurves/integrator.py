"""Path and grid integration of null curves, plus ODE growth certificates.

Two integration problems appear throughout:

* the C^3 curve F(z) = integral of phi dz from the basepoint, computed by
  adaptive Gauss-Legendre panels (the integrand is holomorphic, so panel
  doubling converges extremely fast);
* the SL(2,C) curve B' = B psi along a path, stepped with classical RK4 and
  step-doubling error control, renormalizing det(B) to 1 by the principal
  square root after each accepted step.

The certificate functions re-check integrated solutions against a priori
growth, first-order remainder and comparison bounds; they are used both as
self-tests during construction runs and as a standalone verification suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import matrix_norm
from .grids import PolarGrid
from .weierstrass import WData

__all__ = [
    "Path",
    "IntegrationError",
    "integrate_c3",
    "integrate_sl2",
    "CurveField",
    "grid_solve",
    "ODEProblem",
    "ODESolution",
    "solve_ode",
    "bound_growth",
    "remainder_first_order",
    "compare_solutions",
    "Certificate",
    "ComparisonReport",
]

_ID2 = np.eye(2, dtype=complex)

# 12-point Gauss-Legendre on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Path:
    """Polyline in the closed disc; integration subdivides each segment."""

    points: tuple

    def __init__(self, points):
        pts = tuple(complex(p) for p in points)
        if len(pts) < 1:
            raise ValueError("path needs at least one point")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise ValueError("consecutive path points must be distinct")
        object.__setattr__(self, "points", pts)

    def length(self):
        return sum(abs(b - a) for a, b in zip(self.points, self.points[1:]))

    @classmethod
    def line(cls, a, b):
        return cls([a, b])


def _segment_quad(f, a, b, tol, max_depth=14):
    """Adaptive GL quadrature of f along the straight segment a->b."""
    def panel(lo, hi):
        z = lo + (hi - lo) * _GL_X
        return (hi - lo) * np.tensordot(_GL_W, f(z), axes=(0, 0))

    total = panel(a, b)
    n = 1
    for _ in range(max_depth):
        n *= 2
        ts = np.linspace(0, 1, n + 1)
        zs = a + (b - a) * ts
        refined = sum(panel(zs[i], zs[i + 1]) for i in range(n))
        err = np.max(np.abs(refined - total))
        total = refined
        if err < tol:
            return total, err
    raise IntegrationError(f"quadrature did not converge: residual {err:.3e}")


def integrate_c3(w: WData, path: Path, tol=1e-11):
    """Values of the C^3 null curve at the path vertices (start value 0)."""
    f = lambda z: w.phi_at(z)
    vals = [np.zeros(3, dtype=complex)]
    acc = vals[0]
    for a, b in zip(path.points, path.points[1:]):
        inc, _ = _segment_quad(f, a, b, tol)
        acc = acc + inc
        vals.append(acc)
    return np.array(vals)


def _renormalize_det(b):
    det = b[..., 0, 0] * b[..., 1, 1] - b[..., 0, 1] * b[..., 1, 0]
    return b / np.sqrt(det)[..., None, None], np.abs(det - 1.0)


def _rk4_step(b, z, dz, psi_of):
    """One RK4 step of B' = B psi(z) along the straight direction dz."""
    k1 = b @ psi_of(z) * dz
    k2 = (b + 0.5 * k1) @ psi_of(z + 0.5 * dz) * dz
    k3 = (b + 0.5 * k2) @ psi_of(z + 0.5 * dz) * dz
    k4 = (b + k3) @ psi_of(z + dz) * dz
    return b + (k1 + 2 * k2 + 2 * k3 + k4) / 6.0


def _march_segment(b0, a, bz, psi_of, tol, det_tol=1e-6, max_halvings=60):
    """March B along segment a->bz with step doubling; returns (B, err_acc)."""
    b = b0
    z = a
    remaining = bz - a
    h = 1.0  # fraction of the remaining segment
    err_acc = 0.0
    guard = 0
    while abs(remaining) > 0:
        dz = remaining * h
        full = _rk4_step(b, z, dz, psi_of)
        half = _rk4_step(b, z, dz / 2, psi_of)
        half = _rk4_step(half, z + dz / 2, dz / 2, psi_of)
        err = float(matrix_norm(full - half)) / 15.0
        scale = max(float(matrix_norm(half)), 1.0)
        _, ddrift = _renormalize_det(half)
        if (err > tol * scale or float(ddrift) > det_tol) and guard < max_halvings:
            h = h / 2
            guard += 1
            continue
        if guard >= max_halvings:
            raise IntegrationError(f"step control stalled: err {err:.3e}")
        # accept the doubled-step (locally 5th order) value
        b = half + (half - full) / 15.0
        b, _ = _renormalize_det(b)
        err_acc += err
        z = z + dz
        remaining = bz - z
        # gentle step growth
        h = min(1.0, h * 2) if err < tol * scale / 4 else h
        guard = 0
    return b, err_acc


def integrate_sl2(w: WData, path: Path, init=None, tol=1e-10):
    """Values of the SL(2,C) curve along the path vertices, B(start) = init."""
    psi_of = lambda z: w.psi_at(np.asarray(z, dtype=complex))
    b = _ID2.copy() if init is None else np.array(init, dtype=complex)
    vals = [b]
    for a, bz in zip(path.points, path.points[1:]):
        b, _ = _march_segment(b, a, bz, psi_of, tol)
        vals.append(b)
    return np.array(vals)


# ---------------------------------------------------------------------------
# grid fields


@dataclass(frozen=True)
class CurveField:
    """Curve values on a polar grid with integration self-diagnostics."""

    kind: str  # "sl2" | "c3"
    grid: PolarGrid
    values: np.ndarray = field(repr=False)
    base_value: np.ndarray = field(repr=False)
    loop_residual: float = 0.0
    step_error: float = 0.0
    wdata: WData | None = None

    def norms(self):
        if self.kind == "sl2":
            return matrix_norm(self.values)
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=-1))


def _columns_march(w: WData, radii, thetas, tol):
    """March all angular columns radially at once with per-column steps."""
    nt = len(thetas)
    eit = np.exp(1j * thetas)
    out = np.empty((len(radii), nt, 2, 2), dtype=complex)
    b = np.broadcast_to(_ID2, (nt, 2, 2)).copy()
    if radii[0] != 0.0:
        raise ValueError("column march expects radii starting at 0")
    out[0] = b
    err_acc = 0.0

    def psi_cols(r_arr):
        return w.psi_at(r_arr * eit)

    def rk4_batch(bm, t0, hs):
        """Batched RK4 of B' = B psi(t e^{i theta}) e^{i theta} over radial step hs."""
        dz = hs * eit
        p_lo = w.psi_at(t0 * eit)
        p_mid = w.psi_at((t0 + 0.5 * hs) * eit)
        p_hi = w.psi_at((t0 + hs) * eit)
        k1 = (bm @ p_lo) * dz[:, None, None]
        k2 = ((bm + 0.5 * k1) @ p_mid) * dz[:, None, None]
        k3 = ((bm + 0.5 * k2) @ p_mid) * dz[:, None, None]
        k4 = ((bm + k3) @ p_hi) * dz[:, None, None]
        return bm + (k1 + 2 * k2 + 2 * k3 + k4) / 6.0

    for k in range(1, len(radii)):
        r0, r1 = radii[k - 1], radii[k]
        t = np.full(nt, r0)
        h = np.full(nt, r1 - r0)
        guard = 0
        while True:
            active = t < r1 - 1e-15
            if not np.any(active):
                break
            ha = np.minimum(h, r1 - t)
            full = rk4_batch(b, t, ha)
            half = rk4_batch(rk4_batch(b, t, ha / 2), t + ha / 2, ha / 2)
            err = matrix_norm(full - half) / 15.0
            scale = np.maximum(matrix_norm(half), 1.0)
            ok = (err <= tol * scale) | (~active)
            if np.all(ok):
                b = np.where(active[:, None, None], half + (half - full) / 15.0, b)
                b, _ = _renormalize_det(b)
                t = np.where(active, t + ha, t)
                if np.any(active):
                    err_acc = max(err_acc, float(np.max(err[active])))
                h = np.where(err < tol * scale / 8, np.minimum(h * 2, r1 - r0), h)
                guard = 0
            else:
                h = np.where(ok, h, h / 2)
                guard += 1
                if guard > 200:
                    raise IntegrationError("radial march stalled")
        out[k] = b
    return out, err_acc


def _loop_residual_sample(w: WData, field: CurveField, n_cells=24, tol=1e-10, rng=None):
    """Transport around a sample of grid plaquettes; residual to the identity."""
    radii, thetas = field.grid.radii, field.grid.thetas
    rng = rng or np.random.default_rng(0)
    nr, nt = len(radii), len(thetas)
    worst = 0.0
    psi_of = lambda z: w.psi_at(np.asarray(z, dtype=complex))
    for _ in range(n_cells):
        i = int(rng.integers(1, nr - 1))
        j = int(rng.integers(0, nt))
        j2 = (j + 1) % nt
        r0, r1 = radii[i], radii[i + 1]
        t0, t1 = thetas[j], thetas[j2] if j2 != 0 else thetas[j] + (thetas[1] - thetas[0])
        corners = [
            r0 * np.exp(1j * t0),
            r1 * np.exp(1j * t0),
            r1 * np.exp(1j * t1),
            r0 * np.exp(1j * t1),
            r0 * np.exp(1j * t0),
        ]
        b = _ID2.copy()
        for a, c in zip(corners, corners[1:]):
            # arcs are walked as short chords; integrand is holomorphic
            b, _ = _march_segment(b, a, c, psi_of, tol)
        worst = max(worst, float(matrix_norm(b - _ID2)))
    return worst


def grid_solve(w: WData, grid: PolarGrid, kind="sl2", tol=1e-10, loop_tol=1e-6, check_loops=True, rng=None):
    """Fill a polar grid by radial integration from the center."""
    if kind == "sl2":
        values, err = _columns_march(w, grid.radii, grid.thetas, tol)
        base = values[0, 0]
        fld = CurveField("sl2", grid, values, base, 0.0, err, w)
        if check_loops:
            res = _loop_residual_sample(w, fld, rng=rng)
            if res > loop_tol:
                raise IntegrationError(f"plaquette loop residual {res:.3e} exceeds {loop_tol:.1e}")
            fld = CurveField("sl2", grid, values, base, res, err, w)
        return fld
    if kind == "c3":
        # cumulative GL panels along each radial column
        eit = np.exp(1j * grid.thetas)
        radii = grid.radii
        vals = np.zeros((len(radii), len(eit), 3), dtype=complex)
        acc = np.zeros((len(eit), 3), dtype=complex)
        for k in range(1, len(radii)):
            r0, r1 = radii[k - 1], radii[k]
            mid = 0.5 * (r0 + r1)
            zs1 = (r0 + (mid - r0) * _GL_X)[:, None] * eit[None, :]
            zs2 = (mid + (r1 - mid) * _GL_X)[:, None] * eit[None, :]
            inc = (mid - r0) * np.tensordot(_GL_W, w.phi_at(zs1) * eit[None, :, None], axes=(0, 0))
            inc += (r1 - mid) * np.tensordot(_GL_W, w.phi_at(zs2) * eit[None, :, None], axes=(0, 0))
            acc = acc + inc
            vals[k] = acc
        base = vals[0, 0].copy()
        return CurveField("c3", grid, vals, base, 0.0, 0.0, w)
    raise ValueError(f"unknown field kind {kind!r}")


# ---------------------------------------------------------------------------
# ODE estimates on [0, a]


@dataclass(frozen=True)
class ODEProblem:
    """B^{-1} B' = alpha(t) on [0, horizon], B(0) = id; alpha trace-free."""

    alpha: object  # callable t -> (..., 2, 2)
    horizon: float = 1.0

    @classmethod
    def from_matrix_poly(cls, coeffs, horizon=1.0):
        """alpha(t) = sum_k coeffs[k] t^k with trace-free 2x2 coefficients."""
        coeffs = np.asarray(coeffs, dtype=complex)

        def alpha(t):
            t = np.asarray(t, dtype=float)
            out = np.zeros(t.shape + (2, 2), dtype=complex)
            tp = np.ones_like(t)
            for c in coeffs:
                out += tp[..., None, None] * c
                tp = tp * t
            return out

        return cls(alpha, horizon)


@dataclass(frozen=True)
class ODESolution:
    ts: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # B at ts
    alpha_int: np.ndarray = field(repr=False)  # cumulative int |alpha|
    alpha_mat_int: np.ndarray = field(repr=False)  # cumulative int alpha dt

    @property
    def endpoint(self):
        return self.values[-1]


def solve_ode(problem: ODEProblem, tol=1e-10, n_min=64):
    """Fixed-grid RK4 with Richardson refinement until the endpoint settles.

    The scalar quantity int |alpha| and the matrix integral of alpha are
    accumulated on the same grid by Simpson's rule so certificates compare
    like against like.
    """
    a = problem.horizon

    def run(n):
        ts = np.linspace(0.0, a, n + 1)
        h = a / n
        b = _ID2.copy()
        vals = np.empty((n + 1, 2, 2), dtype=complex)
        vals[0] = b
        al = problem.alpha
        for k in range(n):
            t = ts[k]
            k1 = b @ al(t) * h
            k2 = (b + 0.5 * k1) @ al(t + 0.5 * h) * h
            k3 = (b + 0.5 * k2) @ al(t + 0.5 * h) * h
            k4 = (b + k3) @ al(t + h) * h
            b = b + (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
            b, _ = _renormalize_det(b)
            vals[k + 1] = b
        return ts, vals

    n = n_min
    ts, vals = run(n)
    for _ in range(12):
        ts2, vals2 = run(2 * n)
        err = float(matrix_norm(vals2[-1] - vals[-1]))
        ts, vals, n = ts2, vals2, 2 * n
        if err < tol:
            break
    else:
        raise IntegrationError(f"ODE refinement did not converge: {err:.3e}")

    # Simpson cumulative integrals on the final grid (n is even by doubling)
    amat = problem.alpha(ts)
    anorm = matrix_norm(amat)
    h = ts[1] - ts[0]
    cum_norm = np.zeros(len(ts))
    cum_mat = np.zeros((len(ts), 2, 2), dtype=complex)
    for k in range(2, len(ts), 2):
        cum_norm[k] = cum_norm[k - 2] + h / 3 * (anorm[k - 2] + 4 * anorm[k - 1] + anorm[k])
        cum_mat[k] = cum_mat[k - 2] + h / 3 * (amat[k - 2] + 4 * amat[k - 1] + amat[k])
    # odd nodes by local Simpson-3/8-ish fallback (trapezoid is fine at this h)
    for k in range(1, len(ts), 2):
        cum_norm[k] = cum_norm[k - 1] + h / 2 * (anorm[k - 1] + anorm[k])
        cum_mat[k] = cum_mat[k - 1] + h / 2 * (amat[k - 1] + amat[k])
    return ODESolution(ts, vals, cum_norm, cum_mat)


@dataclass(frozen=True)
class Certificate:
    name: str
    passed: bool
    worst: float
    bound_slack: float
    details: dict = field(default_factory=dict)


def bound_growth(problem: ODEProblem, solution: ODESolution, slack=1e-6):
    """Check |B(t)| <= sqrt(2) exp(int_0^t |alpha|) along the whole solution."""
    norms = matrix_norm(solution.values)
    bound = np.sqrt(2.0) * np.exp(solution.alpha_int)
    ratio = float(np.max(norms / bound))
    return Certificate(
        "growth-bound",
        ratio <= 1.0 + slack,
        ratio,
        slack,
        {"max_norm": float(np.max(norms))},
    )


def remainder_first_order(problem: ODEProblem, solution: ODESolution, slack=1e-6):
    """Check |B(t) - id - int alpha| <= (max|B| * int|alpha|)^2 pointwise."""
    z = solution.values - _ID2 - solution.alpha_mat_int
    zn = matrix_norm(z)
    maxb = float(np.max(matrix_norm(solution.values)))
    bound = (maxb * solution.alpha_int) ** 2
    worst = float(np.max(zn - bound))
    return Certificate(
        "first-order-remainder",
        worst <= slack,
        worst,
        slack,
        {"max_remainder": float(np.max(zn))},
    )


@dataclass(frozen=True)
class ComparisonReport:
    m: float
    sup_diff: float
    measured: float
    bound: float
    identity_residual: float
    mu: float
    dist_measured: float
    dist_bound: float
    passed: bool


def compare_solutions(p0: ODEProblem, p1: ODEProblem, tol=1e-10, slack=1e-6):
    """Two solutions with different coefficients: difference and distance bounds.

    Also verifies the exact integral identity
        Y - X = { int X (alpha1 - alpha0) Y^{-1} } Y
    by integrating the bracket as an augmented state on the common grid.
    """
    if p0.horizon != p1.horizon:
        raise ValueError("problems must share the horizon")
    s0 = solve_ode(p0, tol)
    s1 = solve_ode(p1, tol)
    # common grid: refine the coarser by evaluation (grids are nested powers of 2)
    if len(s0.ts) != len(s1.ts):
        n = max(len(s0.ts), len(s1.ts)) - 1
        s0 = solve_ode(p0, tol, n_min=n)
        s1 = solve_ode(p1, tol, n_min=n)
    ts = s0.ts
    x, y = s0.values, s1.values
    m = float(max(np.exp(s0.alpha_int[-1]), np.exp(s1.alpha_int[-1])))
    d_alpha = p1.alpha(ts) - p0.alpha(ts)
    sup_diff = float(np.max(matrix_norm(d_alpha)))
    measured = float(matrix_norm(y[-1] - x[-1]))
    bound = (np.sqrt(2.0) * m) ** 3 * sup_diff

    # bracket integral by Simpson on the common grid
    yinv = np.linalg.inv(y)
    integrand = x @ d_alpha @ yinv
    h = ts[1] - ts[0]
    acc = np.zeros((2, 2), dtype=complex)
    for k in range(2, len(ts), 2):
        acc = acc + h / 3 * (integrand[k - 2] + 4 * integrand[k - 1] + integrand[k])
    if (len(ts) - 1) % 2 == 1:
        acc = acc + h / 2 * (integrand[-2] + integrand[-1])
    identity_residual = float(matrix_norm((y[-1] - x[-1]) - acc @ y[-1]))

    from .algebra import dist_h3, to_h3  # local import to avoid cycle at module load

    mu = 4 * m**4 * (np.sqrt(2.0) + 2 * m**4 * sup_diff)
    dist_measured = float(dist_h3(to_h3(x[-1]), to_h3(y[-1])))
    dist_bound = mu * sup_diff

    passed = (
        measured <= bound + slack
        and identity_residual <= max(100 * tol, slack)
        and dist_measured <= dist_bound + slack
    )
    return ComparisonReport(
        m, sup_diff, measured, bound, identity_residual, mu, dist_measured, dist_bound, passed
    )
