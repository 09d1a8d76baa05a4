"""Metric-amplifying deformation of Weierstrass data on one labyrinth comb.

The step follows the classical recipe: rotate the frame so the Gauss map is
bounded away from 0 and infinity on the comb neighborhood, substitute
(g, eta) -> (g/h, h eta) with h = exp(p) for a polynomial bump p fitted by
weighted least squares (large on the comb, flat elsewhere), then rotate
back.  Because the product g*eta is invariant under the substitution, the
third component of the derivative vector is untouched in the rotated frame,
which makes the orthogonal-move property exact by construction.

Every advertised inequality is measured, never assumed.  A hard fact of the
numerics is that no polynomial of practical degree can drop from a large
value on the comb to nearly zero across the razor-thin removal gap, so with
the closeness audit enforced right up to the gap the fitted bump collapses
to almost nothing and the amplification floors stay at their undeformed
values; the floors reported by the result say exactly what survived.  The
`spill_margin` option enforces closeness only beyond a stated standoff band
around the comb and reports the in-band spill separately; with a margin of
a few tooth spacings the fit can localize real amplification on the outer
teeth, which is what drives the intrinsic-radius growth in the construction
loop.  Both measurements (beyond-margin and full) are always recorded.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expressions import ExpPoly, HoloExpr, Poly, Prod, Quot, scaled
from .grids import default_grid
from .labyrinth import Labyrinth, sector
from .weierstrass import WData, su2_conjugate, rotation_from_su2
from .algebra import su2_from_axis_angle

__all__ = [
    "DeformationParams",
    "DeformationResult",
    "FitReport",
    "RangeUnfixable",
    "FitFailed",
    "deform",
    "lopez_ros",
    "fit_bump",
    "rotation_search",
]


class RangeUnfixable(RuntimeError):
    pass


class FitFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class DeformationParams:
    n: int
    j: int
    eps: float
    degree_cap: int = 120
    floor_omega: float | None = None  # requested min |phi~| on the comb
    n_spine: int = 160
    brick_rad: int = 2
    brick_ang: int = 6
    off_grid: tuple = (96, 384)
    audit_grid: tuple = (160, 640)
    fit_subsample: int = 9000
    spill_margin: float | None = None  # enforce closeness only beyond this distance
    omega_weight: float = 0.5
    kappa_cap: float = 3.0e3
    require_g_range: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.degree_cap < 8:
            raise ValueError("degree cap must be at least 8")
        if not 1 <= self.j <= 2 * self.n:
            raise ValueError("sector index out of range")

    @property
    def off_bound(self):
        return self.eps / (2 * self.n**2)


@dataclass(frozen=True)
class FitReport:
    degree: int
    omega_residual: float
    off_residual: float
    scale: float
    n_rows: int


@dataclass(frozen=True)
class DeformationResult:
    wdata: WData
    u: np.ndarray
    tilt: float
    su2: np.ndarray = field(repr=False)
    rotation: np.ndarray = field(repr=False)
    off_sup: float
    off_sup_full: float
    spill_margin: float
    floor_omega: float
    floor_omega_outer: float
    floor_varpi: float
    floor_omega_before: float
    lambda_min_before: float
    amplification: float
    amplification_outer: float
    fitted_c: float
    degree_used: int
    kappa: float
    g_range: tuple
    g_range_ok: bool
    orthogonality_residual: float
    bump: HoloExpr = field(repr=False, default=None)
    fit: FitReport = field(repr=False, default=None)


def lopez_ros(w: WData, h: HoloExpr, audit=None, tol=1e-9):
    """(g, eta) -> (g/h, h eta); the product g*eta is exactly invariant.

    h must be zero-free on the closed disc.  exp-type factors are accepted
    structurally; anything else is screened on an audit grid.
    """
    if isinstance(h, ExpPoly):
        inv = ExpPoly(scaled(-1.0, h.poly))
    else:
        grid = audit or default_grid(64, 128)
        vals = np.abs(h(grid.nodes()))
        if float(np.min(vals)) <= tol:
            raise ValueError("amplifying factor has zeros on the closed disc")
        inv = Quot(Poly([1.0]), h)
    return WData(
        w.g_num,
        Prod([w.g_den, h]),
        Prod([w.eta_core, inv]),
        w.basepoint,
    )


# ---------------------------------------------------------------------------
# bump fitting


def _power_matrix(z, degree):
    """Columns 1, z, ..., z^degree by cumulative multiplication."""
    z = np.asarray(z, dtype=complex).ravel()
    out = np.empty((len(z), degree + 1), dtype=complex)
    out[:, 0] = 1.0
    for k in range(1, degree + 1):
        out[:, k] = out[:, k - 1] * z
    return out


def fit_bump(omega_pts, off_pts, degree_cap, targets=1.0, omega_weight=0.5, ridge=1e-4, rcond=1e-12):
    """Weighted least-squares polynomial: Re p = targets on the comb cloud,
    p = 0 on the off cloud.

    Columns are sup-normalized and a small ridge keeps near-degenerate mode
    combinations from exploding into spikes between sample points.  Returns
    (coeffs, comb residual, off residual).
    """
    omega_pts = np.asarray(omega_pts, dtype=complex).ravel()
    off_pts = np.asarray(off_pts, dtype=complex).ravel()
    if omega_pts.size == 0 or off_pts.size == 0:
        raise FitFailed("empty sample cloud")
    targets = np.broadcast_to(np.asarray(targets, dtype=float), omega_pts.shape)
    vals_om = _power_matrix(omega_pts, degree_cap)
    vals_off = _power_matrix(off_pts, degree_cap)
    col_scale = np.maximum(
        np.max(np.abs(vals_om), axis=0), np.max(np.abs(vals_off), axis=0)
    )
    col_scale = np.where(col_scale > 0, col_scale, 1.0)
    vals_om_n = vals_om / col_scale
    vals_off_n = vals_off / col_scale
    w_om = omega_weight * np.sqrt(max(len(off_pts), 1) / max(len(omega_pts), 1))

    n_terms = degree_cap + 1
    rows = [
        # off block: both real and imaginary parts pinned to zero
        np.concatenate([vals_off_n.real, -vals_off_n.imag], axis=1),
        np.concatenate([vals_off_n.imag, vals_off_n.real], axis=1),
        # comb block: real part pinned to the target profile
        w_om * np.concatenate([vals_om_n.real, -vals_om_n.imag], axis=1),
    ]
    rhs = [np.zeros(len(off_pts)), np.zeros(len(off_pts)), w_om * targets]
    if ridge > 0:
        scale = np.sqrt(len(off_pts)) * ridge
        rows.append(scale * np.eye(2 * n_terms))
        rhs.append(np.zeros(2 * n_terms))
    a = np.concatenate(rows, axis=0)
    b = np.concatenate(rhs)
    x, *_ = np.linalg.lstsq(a, b, rcond=rcond)
    coeffs = (x[:n_terms] + 1j * x[n_terms:]) / col_scale

    p_om = vals_om @ coeffs
    p_off = vals_off @ coeffs
    return coeffs, float(np.max(np.abs(p_om.real - targets))), float(np.max(np.abs(p_off)))


# ---------------------------------------------------------------------------
# rotation search


def _g_abs_rotated(gn, gd, p, q):
    num = np.abs(p * gn + q * gd)
    den = np.abs(np.conj(p) * gd - np.conj(q) * gn)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where(den == 0.0, np.inf, out)


def rotation_search(w: WData, cloud, n, n_tilt=13, n_axis=12):
    """Smallest tilt (at most arccos(1 - 2/n)) banding |g| on the cloud.

    When no admissible rotation reaches the band [2/sqrt(n), sqrt(n)/2] the
    search settles for the rotation maximizing the worst band ratio; the
    caller records whether the band was met.
    """
    lo, hi = 2.0 / np.sqrt(n), np.sqrt(n) / 2.0
    theta_max = np.arccos(1.0 - 2.0 / n) * (1.0 - 1e-12)
    memo = {}
    gn = w.g_num(cloud, memo)
    gd = w.g_den(cloud, memo)

    best = None  # (sort key, a, tilt, alpha, range, feasible)
    for tilt in np.linspace(0.0, theta_max, n_tilt):
        for alpha in np.linspace(0.0, 2 * np.pi, n_axis, endpoint=False):
            if tilt == 0.0 and alpha > 0.0:
                continue
            a = su2_from_axis_angle([np.cos(alpha), np.sin(alpha), 0.0], tilt)
            p, q = a[0, 0], a[0, 1]
            vals = _g_abs_rotated(gn, gd, p, q)
            vmin, vmax = float(np.min(vals)), float(np.max(vals))
            feasible = vmin >= lo and vmax <= hi
            score = min(vmin / lo, hi / max(vmax, 1e-300))
            key = (feasible, score if not feasible else -tilt, -tilt, -alpha)
            if best is None or key > best[0]:
                best = (key, a, tilt, alpha, (vmin, vmax), feasible)
    _, a, tilt, _, g_range, feasible = best
    return a, tilt, g_range, feasible


# ---------------------------------------------------------------------------
# the deformation step


def _phi_rot_arrays(gn, gd, ec, e_pos=None):
    """phi of (g_num, g_den*h, eta_core/h) from cached arrays; h = e^{P}."""
    if e_pos is None:
        gd2, gn2 = gd * gd, gn * gn
    else:
        gd2, gn2 = gd * gd * e_pos, gn * gn / e_pos
    return np.stack(
        [0.5 * ec * (gd2 - gn2), 0.5j * ec * (gd2 + gn2), ec * gn * gd],
        axis=-1,
    )


def _norms(phi):
    with np.errstate(over="ignore", invalid="ignore"):
        a = np.abs(phi)
        return np.sqrt(np.sum(a * a, axis=-1))


def deform(w: WData, params: DeformationParams, lab: Labyrinth) -> DeformationResult:
    """One amplification step on comb j; all inequalities measured post-hoc."""
    if lab.n != params.n:
        raise ValueError("labyrinth parameter does not match params.n")
    sect = sector(lab, params.j)
    rng = np.random.default_rng(params.seed)
    bound = params.off_bound

    omega_cloud = sect.omega_cloud(params.n_spine, params.brick_rad, params.brick_ang)
    varpi_cloud = sect.varpi_cloud(params.n_spine, params.brick_rad, params.brick_ang)
    margin = params.spill_margin if params.spill_margin is not None else lab.delta_f
    off_fit = sect.off_cloud(*params.off_grid, clearance=margin, rng=rng)
    if len(off_fit) > params.fit_subsample:
        sel = rng.choice(len(off_fit), params.fit_subsample, replace=False)
        off_fit = off_fit[np.sort(sel)]

    # rotation putting |g| into band on the comb neighborhood
    a_rot, tilt, g_range, g_ok = rotation_search(w, varpi_cloud, params.n)
    if params.require_g_range and not g_ok:
        raise RangeUnfixable(
            f"no rotation with tilt <= {np.arccos(1-2/params.n):.4f} bands |g|: range {g_range}"
        )
    rot = rotation_from_su2(a_rot)
    u = rot[2, :].copy()  # R^{-1} e3
    w_rot = su2_conjugate(w, a_rot)

    def bundles(zs):
        memo = {}
        return (
            w_rot.g_num(zs, memo) + 0j,
            w_rot.g_den(zs, memo) + 0j,
            w_rot.eta_core(zs, memo) + 0j,
        )

    gn_off, gd_off, ec_off = bundles(off_fit)
    gn_om, gd_om, ec_om = bundles(omega_cloud)
    gn_vp, gd_vp, ec_vp = bundles(varpi_cloud)
    phi_off = _phi_rot_arrays(gn_off, gd_off, ec_off)

    lam_min = float(np.min(w.lambda_at(default_grid(128, 256).nodes())))
    lam_om_before = float(np.min(_norms(_phi_rot_arrays(gn_om, gd_om, ec_om))))
    floor_req = (
        params.floor_omega
        if params.floor_omega is not None
        else params.n**3.5 * lam_min / (1.0 + params.n / 4.0)
    )

    # pointwise amplitude targets log|h| on the comb: |phi~| >= |h||eta|/sqrt(2),
    # zeroed wherever the current data already provides the floor, so repeated
    # passes never stack amplification on the same spot
    eta_om = np.abs(ec_om * gd_om * gd_om)
    targets = np.log(np.maximum(np.sqrt(2.0) * floor_req / np.maximum(eta_om, 1e-300), 1.0))
    targets = np.minimum(targets, np.log(params.kappa_cap))
    t_max = float(np.max(targets))
    if t_max == 0.0:
        targets = targets + 1e-9  # degenerate request: keep the solver well posed
    else:
        # radial reachability: modes below ~8.2/margin are pinned by the
        # stopband, so amplitude at depth d below the rim retains at most
        # about exp(-k d); asking deeper only drags the fit off the shell
        k_ref = 8.2 / max(margin, 1e-6)
        depth = np.maximum(1.0 - np.abs(omega_cloud), 0.0)
        targets = targets * np.exp(-k_ref * depth)

    def exp_clip(vals):
        return np.exp(np.clip(vals.real, -700, 700) + 1j * vals.imag)

    def off_sup_from(vals_off_poly, s):
        phi_t = _phi_rot_arrays(gn_off, gd_off, ec_off, exp_clip(s * vals_off_poly))
        return float(np.max(_norms(phi_t - phi_off)))

    outer_mask = 1.0 - np.abs(omega_cloud) <= 4.0 / params.n**3
    ladder = sorted({min(d, params.degree_cap) for d in (16, 40, 120, 240, params.degree_cap)})
    best = None  # ((outer floor, global floor), scale, coeffs, degree, om_res, off_res)
    for degree in ladder:
        coeffs, om_res, off_res = fit_bump(
            omega_cloud, off_fit, degree, targets=targets, omega_weight=params.omega_weight
        )
        vals_off = _power_matrix(off_fit, degree) @ coeffs
        vals_om = _power_matrix(omega_cloud, degree) @ coeffs

        s = 1.0
        if off_sup_from(vals_off, s) > 0.9 * bound:
            lo_s, hi_s = 0.0, 1.0
            for _ in range(40):
                mid = 0.5 * (lo_s + hi_s)
                if off_sup_from(vals_off, mid) <= 0.9 * bound:
                    lo_s = mid
                else:
                    hi_s = mid
            s = lo_s
        fl = _norms(_phi_rot_arrays(gn_om, gd_om, ec_om, exp_clip(s * vals_om)))
        floor_here = float(np.min(fl))
        floor_outer_here = float(np.min(fl[outer_mask])) if np.any(outer_mask) else floor_here
        key = (floor_outer_here, floor_here)
        if best is None or key > best[0]:
            best = (key, s, coeffs, degree, om_res, off_res)
        if floor_here >= floor_req:
            break

    if best is None:
        raise FitFailed("no admissible bump found")
    _, scale_s, coeffs, degree, om_res, off_res = best

    # the fit clouds cannot see everything: shrink until the dense audit
    # cloud satisfies the closeness bound as well
    audit = sect.off_cloud(*params.audit_grid, clearance=margin)
    gn_as, gd_as, ec_as = bundles(audit)
    phi_as = _phi_rot_arrays(gn_as, gd_as, ec_as)
    vals_audit = _power_matrix(audit, degree) @ coeffs

    def audit_off_at(s):
        phi_t = _phi_rot_arrays(gn_as, gd_as, ec_as, exp_clip(s * vals_audit))
        return float(np.max(_norms(phi_t - phi_as)))

    for _ in range(60):
        if scale_s == 0.0 or audit_off_at(scale_s) < bound:
            break
        scale_s *= 0.8
    else:
        raise FitFailed("closeness audit kept failing while shrinking the bump")

    p_expr = Poly(scale_s * coeffs)
    h = ExpPoly(p_expr)
    w_def_rot = lopez_ros(w_rot, h)
    w_new = su2_conjugate(w_def_rot, a_rot.conj().T)
    log_kappa = float(scale_s * t_max)

    # post-hoc measurements
    audit_full = sect.off_cloud(*params.audit_grid)

    def pe(zs):
        return exp_clip(p_expr(zs))

    def off_sup_on(zs):
        gn_a, gd_a, ec_a = bundles(zs)
        base = _phi_rot_arrays(gn_a, gd_a, ec_a)
        new = _phi_rot_arrays(gn_a, gd_a, ec_a, pe(zs))
        return float(np.max(_norms(new - base)))

    off_sup = audit_off_at(scale_s) if len(audit) else 0.0
    off_sup_full = off_sup_on(audit_full) if len(audit_full) else off_sup

    phi_om_new = _phi_rot_arrays(gn_om, gd_om, ec_om, pe(omega_cloud))
    floor_omega = float(np.min(_norms(phi_om_new)))
    outer = 1.0 - np.abs(omega_cloud) <= 4.0 / params.n**3
    floor_omega_outer = float(np.min(_norms(phi_om_new)[outer])) if np.any(outer) else floor_omega
    lam_outer_before = (
        float(np.min(_norms(_phi_rot_arrays(gn_om, gd_om, ec_om))[outer]))
        if np.any(outer)
        else lam_om_before
    )
    phi_vp_new = _phi_rot_arrays(gn_vp, gd_vp, ec_vp, pe(varpi_cloud))
    floor_varpi = float(np.min(_norms(phi_vp_new)))

    # orthogonal-move residual: exact in the rotated frame, where the third
    # component is untouched; measured there to avoid synthetic cancellation
    samples = np.concatenate([omega_cloud[::5], audit[:: max(len(audit) // 400, 1)]])
    gn_s, gd_s, ec_s = bundles(samples)
    phi3_old = ec_s * gn_s * gd_s
    e_s = pe(samples)
    phi3_new = (ec_s / e_s) * gn_s * (gd_s * e_s)
    scale = np.maximum(np.abs(phi3_old), 1.0)
    ortho = float(np.max(np.abs(phi3_new - phi3_old) / scale))

    return DeformationResult(
        wdata=w_new,
        u=u,
        tilt=float(tilt),
        su2=a_rot,
        rotation=rot,
        off_sup=off_sup,
        off_sup_full=off_sup_full,
        spill_margin=float(margin),
        floor_omega=floor_omega,
        floor_omega_outer=floor_omega_outer,
        floor_varpi=floor_varpi,
        floor_omega_before=lam_om_before,
        lambda_min_before=lam_min,
        amplification=floor_omega / max(lam_om_before, 1e-300),
        amplification_outer=floor_omega_outer / max(lam_outer_before, 1e-300),
        fitted_c=floor_omega / params.n**3.5,
        degree_used=degree,
        kappa=float(np.exp(log_kappa)),
        g_range=g_range,
        g_range_ok=bool(g_ok),
        orthogonality_residual=ortho,
        bump=p_expr,
        fit=FitReport(
            degree=degree,
            omega_residual=om_res,
            off_residual=off_res,
            scale=float(scale_s),
            n_rows=2 * len(off_fit) + len(omega_cloud),
        ),
    )
