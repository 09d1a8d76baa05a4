"""Annular labyrinth geometry on the unit disc.

For a parameter N the construction uses radii r_k = 1 - k/N^3 down to
1 - 2/N, kept as exact rationals.  Annuli alternate parity: even annuli lose
the N rays at angles 2m*pi/N, odd annuli lose the N rays at (2m+1)*pi/N, and
every circle loses a neighborhood of width delta = 1/(4 N^3) together with
the removed rays.  What remains of the big annulus is a field of thin
"bricks" (corridor pieces of radial width 1/(2 N^3)), each straddling exactly
one ray of the opposite parity.

For j = 1..2N the comb omega_j is the full ray segment at angle j*pi/N inside
the big annulus (the spine) together with every brick that straddles that ray
(the teeth); varpi_j is its closed delta-neighborhood.  All membership
predicates reduce to exact point/segment/arc distances, so there is no
rasterization anywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = ["Labyrinth", "SectorSets", "build", "sector", "avoid_path", "PathError"]

TWO_PI = 2.0 * np.pi


class PathError(RuntimeError):
    pass


def _wrap(a):
    """Wrap angles into [0, 2*pi)."""
    return np.mod(a, TWO_PI)


def _angdiff(a, b):
    """Signed angular difference a - b in (-pi, pi]."""
    return np.mod(a - b + np.pi, TWO_PI) - np.pi


def _seg_dist(z, theta, a, b):
    """Distance from z to the radial segment {t e^{i theta}, t in [a, b]}."""
    w = np.asarray(z, dtype=complex) * np.exp(-1j * theta)
    t = np.clip(w.real, a, b)
    return np.abs(w - t)


@dataclass(frozen=True)
class Labyrinth:
    n: int
    radii: tuple = field(repr=False)  # Fractions r_0 .. r_{2N^2}
    delta: Fraction = field(repr=False)

    # float caches
    radii_f: np.ndarray = field(repr=False, default=None)
    delta_f: float = 0.0
    inner_f: float = 0.0

    @property
    def n_annuli(self):
        return 2 * self.n**2

    # -- index helpers ------------------------------------------------------

    def annulus_of(self, r):
        """Index k of the annulus (r_{k+1}, r_k) containing radius r."""
        k = np.floor((1.0 - np.asarray(r, float)) * self.n**3).astype(int)
        return np.clip(k, 0, self.n_annuli - 1)

    def removed_parity(self, k):
        """Ray parity removed on annulus k: 0 = even rays, 1 = odd rays."""
        return np.asarray(k) % 2

    def ray_angle(self, i, parity):
        return (2 * i + parity) * np.pi / self.n

    def claim_of(self, k, m):
        """Comb index j in 1..2N owning brick (annulus k, sector m)."""
        if k % 2 == 0:
            return 2 * m + 1
        return 2 * m + 2

    def brick_bounds(self, k, m):
        """(a, b, theta_lo, theta_hi) of brick m in annulus k (floats)."""
        a = float(self.radii[k + 1] + self.delta)
        b = float(self.radii[k] - self.delta)
        parity = k % 2
        theta_lo = self.ray_angle(m, parity)
        theta_hi = self.ray_angle(m + 1, parity)
        return a, b, theta_lo, theta_hi

    # -- exact distances to the removed set ---------------------------------

    def dist_circles(self, z):
        r = np.abs(np.asarray(z, dtype=complex))
        k = np.clip(np.round((1.0 - r) * self.n**3).astype(int), 0, self.n_annuli)
        best = np.abs(r - self.radii_f[k])
        for dk in (-1, 1):
            kk = np.clip(k + dk, 0, self.n_annuli)
            best = np.minimum(best, np.abs(r - self.radii_f[kk]))
        return best

    def dist_ray_family(self, z, parity):
        """Distance to the union of parity rays restricted to their annuli."""
        z = np.asarray(z, dtype=complex)
        phi = _wrap(np.angle(z))
        r = np.abs(z)
        spacing = TWO_PI / self.n
        base = parity * np.pi / self.n
        i0 = np.round((phi - base) / spacing).astype(int)
        kc = self.annulus_of(r)
        best = np.full(np.shape(z), np.inf)
        for di in (-1, 0, 1):
            theta = base + (i0 + di) * spacing
            for dk in (-2, -1, 0, 1, 2):
                kk = kc + dk
                valid = (kk >= 0) & (kk < self.n_annuli) & (kk % 2 == parity)
                if not np.any(valid):
                    continue
                kkc = np.clip(kk, 0, self.n_annuli - 1)
                a = self.radii_f[kkc + 1]
                b = self.radii_f[kkc]
                d = _seg_dist(z, theta, a, b)
                best = np.where(valid, np.minimum(best, d), best)
        return best

    def dist_sigma(self, z):
        """Distance to the full removed set (circles plus parity rays)."""
        d = self.dist_circles(z)
        d = np.minimum(d, self.dist_ray_family(z, 0))
        d = np.minimum(d, self.dist_ray_family(z, 1))
        return d

    # -- region predicates ---------------------------------------------------

    def in_big_annulus(self, z):
        r = np.abs(np.asarray(z, dtype=complex))
        return (r >= self.inner_f) & (r <= 1.0)

    def in_omega_region(self, z):
        """Membership in the corridor field (closure of the brick union)."""
        return self.in_big_annulus(z) & (self.dist_sigma(z) >= self.delta_f - 1e-15)

    def component_of(self, z):
        """(annulus k, sector m) of a corridor point; undefined elsewhere."""
        z = np.asarray(z, dtype=complex)
        k = self.annulus_of(np.abs(z))
        phi = _wrap(np.angle(z))
        spacing = TWO_PI / self.n
        parity = k % 2
        m = np.floor((phi - parity * np.pi / self.n) / spacing).astype(int) % self.n
        return k, m

    def sector(self, j):
        return sector(self, j)

    def coverage_audit(self):
        """Every brick is owned by exactly one comb whose predicate accepts it."""
        for k in range(self.n_annuli):
            for m in range(self.n):
                j = self.claim_of(k, m)
                if not 1 <= j <= 2 * self.n:
                    raise AssertionError(f"brick ({k},{m}) claims out-of-range j={j}")
                a, b, lo, hi = self.brick_bounds(k, m)
                zc = 0.5 * (a + b) * np.exp(1j * 0.5 * (lo + hi))
                if not bool(self.in_omega_region(zc)):
                    raise AssertionError(f"brick ({k},{m}) center not in corridor field")
                if sector(self, j).dist_omega(zc) > 1e-13:
                    raise AssertionError(f"brick ({k},{m}) not claimed by comb {j}")
        return True


def build(n: int) -> Labyrinth:
    """Construct the labyrinth at parameter n (n >= 4), radii exact."""
    if n < 4:
        raise ValueError("labyrinth parameter must satisfy n >= 4")
    n3 = Fraction(n) ** 3
    radii = tuple(1 - Fraction(k) / n3 for k in range(2 * n**2 + 1))
    delta = Fraction(1, 4 * n**3)
    lab = Labyrinth(
        n=n,
        radii=radii,
        delta=delta,
        radii_f=np.array([float(r) for r in radii]),
        delta_f=float(delta),
        inner_f=float(radii[-1]),
    )
    return lab


# ---------------------------------------------------------------------------
# per-comb sets


def _brick_distance(z, a, b, theta_lo, theta_hi, delta):
    """Exact distance from z to one brick (0 inside)."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    phi = _wrap(np.angle(z))
    mid = 0.5 * (theta_lo + theta_hi)
    dphi = _angdiff(phi, mid)  # signed offset from sector center
    half = 0.5 * (theta_hi - theta_lo)

    s_lo = r * np.sin(np.clip(dphi + half, -np.pi / 2, np.pi / 2))
    s_hi = r * np.sin(np.clip(half - dphi, -np.pi / 2, np.pi / 2))
    inside = (
        (r >= a)
        & (r <= b)
        & (np.abs(dphi) < half)
        & (s_lo >= delta)
        & (s_hi >= delta)
    )

    t_a, t_b = np.sqrt(max(a * a - delta * delta, 0.0)), np.sqrt(max(b * b - delta * delta, 0.0))
    # straight edges parallel to the bounding rays at distance delta
    w_lo = z * np.exp(-1j * theta_lo)
    t_cl = np.clip(w_lo.real, t_a, t_b)
    d_lo = np.hypot(w_lo.real - t_cl, w_lo.imag - delta)
    w_hi = z * np.exp(-1j * theta_hi)
    t_cl = np.clip(w_hi.real, t_a, t_b)
    d_hi = np.hypot(w_hi.real - t_cl, w_hi.imag + delta)
    # arcs at the two bounding radii, clipped to the brick's angular reach
    d_arcs = np.full(np.shape(z), np.inf)
    for rr in (a, b):
        cut = np.arcsin(min(delta / rr, 1.0))
        lo_c, hi_c = -half + cut, half - cut
        p_cl = np.clip(dphi, lo_c, hi_c)
        d = np.sqrt(np.maximum(r * r + rr * rr - 2 * r * rr * np.cos(dphi - p_cl), 0.0))
        d_arcs = np.minimum(d_arcs, d)

    d_out = np.minimum(np.minimum(d_lo, d_hi), d_arcs)
    return np.where(inside, 0.0, d_out)


@dataclass(frozen=True)
class SectorSets:
    """Comb omega_j (spine + teeth), its delta-neighborhood, and sample clouds."""

    lab: Labyrinth
    j: int
    theta: float
    zeta: complex
    bricks: tuple  # (annulus k, sector m) pairs owned by this comb

    def dist_omega(self, z):
        """Exact distance to the comb."""
        lab = self.lab
        z = np.asarray(z, dtype=complex)
        best = _seg_dist(z, self.theta, lab.inner_f, 1.0)
        r = np.abs(z)
        delta = lab.delta_f
        for (k, m) in self.bricks:
            a, b, lo, hi = lab.brick_bounds(k, m)
            # radial prune: the brick lives in [a - 0, b]; cheap lower bound
            lb = np.where(r < a, a - r, np.where(r > b, r - b, 0.0))
            if np.all(lb >= best):
                continue
            d = _brick_distance(z, a, b, lo, hi, delta)
            best = np.minimum(best, d)
        return best

    def in_omega(self, z, tol=1e-12):
        return self.dist_omega(z) <= tol

    def in_varpi(self, z, tol=0.0):
        return self.dist_omega(z) <= self.lab.delta_f + tol

    # -- sample clouds -------------------------------------------------------

    def omega_cloud(self, n_spine=160, brick_rad=2, brick_ang=8):
        """Points of the comb: spine samples plus a grid inside every tooth."""
        lab = self.lab
        pts = [np.linspace(lab.inner_f, 1.0, n_spine) * np.exp(1j * self.theta)]
        for (k, m) in self.bricks:
            a, b, lo, hi = lab.brick_bounds(k, m)
            cut = np.arcsin(lab.delta_f / a)
            rads = np.linspace(a, b, brick_rad)
            angs = np.linspace(lo + cut, hi - cut, brick_ang)
            pts.append((rads[:, None] * np.exp(1j * angs)[None, :]).ravel())
        return np.concatenate(pts)

    def varpi_cloud(self, n_spine=160, brick_rad=2, brick_ang=8):
        """Omega cloud plus its outward offsets at distance delta (boundary)."""
        lab = self.lab
        d = lab.delta_f
        base = self.omega_cloud(n_spine, brick_rad, brick_ang)
        side = np.exp(1j * (self.theta + np.pi / 2))
        spine = np.linspace(lab.inner_f, 1.0 - d, n_spine) * np.exp(1j * self.theta)
        offs = [base, spine + d * side, spine - d * side,
                np.array([self.zeta, (1.0 - 0j) * np.exp(1j * self.theta)])]
        for (k, m) in self.bricks:
            a, b, lo, hi = lab.brick_bounds(k, m)
            cut = np.arcsin(lab.delta_f / a)
            angs = np.linspace(lo + cut, hi - cut, brick_ang)
            offs.append((a - d) * np.exp(1j * angs))
            offs.append((b + d) * np.exp(1j * angs))
        pts = np.concatenate(offs)
        return pts[np.abs(pts) <= 1.0]

    def off_cloud(self, grid_r=96, grid_t=384, clearance=None, rng=None, near_band=None):
        """Samples of the closed disc at distance > delta from the comb.

        clearance: minimum dist_omega accepted (default: delta, open complement).
        near_band: when set, additionally return a dense ring of samples with
        dist_omega in (delta, near_band] for spill auditing.
        """
        lab = self.lab
        d = lab.delta_f
        clearance = d if clearance is None else clearance
        rr = np.linspace(0.02, 1.0, grid_r)
        tt = np.linspace(0.0, TWO_PI, grid_t, endpoint=False)
        z = (rr[:, None] * np.exp(1j * tt)[None, :]).ravel()
        if rng is not None:
            jitter = (rng.random(z.shape) - 0.5) * (1.0 / grid_r)
            z = z * (1 + 0.2 * jitter)
            z = z[np.abs(z) <= 1.0]
        dist = self.dist_omega(z)
        far = z[dist > clearance + 1e-15]
        if near_band is None:
            return far
        band = z[(dist > d + 1e-15) & (dist <= near_band)]
        return far, band


def sector(lab: Labyrinth, j: int) -> SectorSets:
    """Comb data for index j in 1..2N."""
    if not 1 <= j <= 2 * lab.n:
        raise ValueError(f"sector index must be in 1..{2*lab.n}")
    theta = j * np.pi / lab.n
    # teeth: bricks straddling the ray j*pi/N live in annuli of the matching
    # parity; the sector index within such an annulus follows from j
    if j % 2 == 1:
        parity, m = 0, (j - 1) // 2
    else:
        parity, m = 1, (j - 2) // 2
    bricks = tuple((k, m) for k in range(parity, lab.n_annuli, 2))
    zeta_mod = 1 - Fraction(2, lab.n) - lab.delta
    zeta = float(zeta_mod) * np.exp(1j * theta)
    return SectorSets(lab=lab, j=j, theta=theta, zeta=complex(zeta), bricks=bricks)


# ---------------------------------------------------------------------------
# corridor-avoiding paths


def _verify_leg(sect, a, b, clearance, n=24):
    ts = np.linspace(0.0, 1.0, n + 1)
    zs = a + (b - a) * ts
    return bool(np.all(sect.dist_omega(zs) >= clearance))


def _arc_points(r, phi0, phi1, max_step):
    n = max(2, int(np.ceil(abs(phi1 - phi0) / max_step)) + 1)
    return [r * np.exp(1j * p) for p in np.linspace(phi0, phi1, n)]


def avoid_path(lab: Labyrinth, j: int, zfrom, zto, margin=None, clearance_tol=1e-12):
    """Polyline from zfrom to zto keeping every vertex off the open varpi_j.

    The route descends to a ring just inside the big annulus (which the comb
    cannot reach), walks the ring, and climbs back out.  Descents blocked by
    teeth stage at a tooth-free annulus mid-radius, walk angularly to the
    nearest sector-bounding ray (never crossing the spine), and drop down the
    ray corridor, where the distance to the comb is exactly delta.  Every leg
    is verified against the exact distance function; failure raises PathError.
    """
    from .integrator import Path

    sect = sector(lab, j)
    d = lab.delta_f
    margin = d / 2 if margin is None else margin
    ring = lab.inner_f - 2 * d - margin
    clearance = d - clearance_tol
    # chord sagitta along verified arcs must stay well inside the corridor slack
    arc_step = min(np.pi / (16 * lab.n), 2 * np.sqrt(margin))
    free_parity = 1 - (0 if j % 2 == 1 else 1)

    def staging_radii(r):
        """Mid-radii of nearby tooth-free annuli, nearest first."""
        k0 = int(lab.annulus_of(r))
        out = []
        for dk in range(0, 8):
            for k in {k0 - dk, k0 + dk}:
                if 0 <= k < lab.n_annuli and k % 2 == free_parity:
                    out.append(0.5 * (lab.radii_f[k] + lab.radii_f[k + 1]))
        seen, uniq = set(), []
        for v in out:
            if v not in seen:
                seen.add(v)
                uniq.append(v)
        return uniq

    def descend(z):
        """Waypoints from z down to the ring; first entry is z itself."""
        z = complex(z)
        phi = float(np.angle(z))
        if abs(z) <= ring + 1e-15:
            return [z]
        target = ring * np.exp(1j * phi)
        if _verify_leg(sect, z, target, clearance):
            return [z, target]
        side_first = 1.0 if _angdiff(phi, sect.theta) >= 0 else -1.0
        for rmid in [abs(z)] + staging_radii(abs(z)):
            stage = rmid * np.exp(1j * phi)
            if stage != z and not _verify_leg(sect, z, stage, clearance):
                continue
            for side in (side_first, -side_first):
                phi_c = sect.theta + side * np.pi / lab.n
                # shortest angular route; verification rejects spine crossings
                arc_target = phi + float(_angdiff(phi_c, phi))
                legs = [z]
                if stage != z:
                    legs.append(complex(stage))
                legs.extend(complex(c) for c in _arc_points(rmid, phi, arc_target, arc_step)[1:])
                legs.append(ring * np.exp(1j * arc_target))
                ok = all(
                    _verify_leg(sect, a, b, clearance)
                    for a, b in zip(legs, legs[1:])
                    if a != b
                )
                if ok:
                    return legs
        raise PathError(f"no clear descent from {z:.6f} for comb {j}")

    if complex(zfrom) == complex(zto):
        return Path([complex(zfrom)])

    down_a = descend(zfrom)
    down_b = descend(zto)
    pts = list(down_a)
    pa, pb = complex(down_a[-1]), complex(down_b[-1])
    if pa != pb:
        if _verify_leg(sect, pa, pb, clearance):
            pts.append(pb)
        else:
            phia, phib = float(np.angle(pa)), float(np.angle(pb))
            dphi = float(_angdiff(phib, phia))
            for c in _arc_points(min(abs(pa), abs(pb), ring), phia, phia + dphi, arc_step)[1:]:
                if complex(c) != pts[-1]:
                    pts.append(complex(c))
            if pts[-1] != pb:
                pts.append(pb)
    for c in reversed(down_b[:-1]):
        if complex(c) != pts[-1]:
            pts.append(complex(c))
    if pts[-1] != complex(zto):
        pts.append(complex(zto))

    dedup = [pts[0]]
    for p in pts[1:]:
        if p != dedup[-1]:
            dedup.append(p)
    zs = np.array(dedup)
    if np.any(sect.dist_omega(zs) < clearance):
        raise PathError("path vertex fell inside the protected neighborhood")
    for a, b in zip(dedup, dedup[1:]):
        if not _verify_leg(sect, a, b, clearance):
            raise PathError("path leg crosses the protected neighborhood")
    return Path(dedup)


# ---------------------------------------------------------------------------
# emitters


def sample_table(lab: Labyrinth, n_samples=20000, seed=0):
    """Random disc samples with membership flags, as structured rows."""
    rng = np.random.default_rng(seed)
    z = np.sqrt(rng.random(n_samples)) * np.exp(1j * TWO_PI * rng.random(n_samples))
    omega_flags = np.zeros(n_samples, dtype=int)
    varpi_flags = np.zeros(n_samples, dtype=int)
    in_region = lab.in_omega_region(z)
    for j in range(1, 2 * lab.n + 1):
        s = sector(lab, j)
        dz = s.dist_omega(z)
        omega_flags = np.where(dz <= 1e-12, j, omega_flags)
        varpi_flags = np.where((varpi_flags == 0) & (dz <= lab.delta_f), j, varpi_flags)
    return {
        "x": z.real,
        "y": z.imag,
        "in_corridor_field": in_region.astype(int),
        "omega_index": omega_flags,
        "varpi_index": varpi_flags,
    }


def render_svg(lab: Labyrinth, width=900):
    """Deterministic SVG sketch: circles, removed rays, comb spines."""
    c = width / 2
    scale = 0.48 * width
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{width}" '
        f'viewBox="0 0 {width} {width}">',
        f'<rect width="{width}" height="{width}" fill="white"/>',
    ]
    for k, r in enumerate(lab.radii_f):
        col = "#bbbbbb" if k % 8 else "#666666"
        lines.append(
            f'<circle cx="{c}" cy="{c}" r="{r*scale:.3f}" fill="none" stroke="{col}" stroke-width="0.4"/>'
        )
    for parity, col in ((0, "#c04040"), (1, "#4040c0")):
        for i in range(lab.n):
            th = lab.ray_angle(i, parity)
            for k in range(parity, lab.n_annuli, 2):
                a, b = lab.radii_f[k + 1], lab.radii_f[k]
                x1, y1 = c + a * scale * np.cos(th), c - a * scale * np.sin(th)
                x2, y2 = c + b * scale * np.cos(th), c - b * scale * np.sin(th)
                lines.append(
                    f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
                    f'stroke="{col}" stroke-width="0.7"/>'
                )
    for j in range(1, 2 * lab.n + 1):
        s = sector(lab, j)
        x1 = c + lab.inner_f * scale * np.cos(s.theta)
        y1 = c - lab.inner_f * scale * np.sin(s.theta)
        x2, y2 = c + scale * np.cos(s.theta), c - scale * np.sin(s.theta)
        lines.append(
            f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
            f'stroke="#20a020" stroke-width="1.0"/>'
        )
        zx, zy = c + s.zeta.real * scale, c - s.zeta.imag * scale
        lines.append(f'<circle cx="{zx:.3f}" cy="{zy:.3f}" r="2.2" fill="#20a020"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
