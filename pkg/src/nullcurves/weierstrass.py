"""Weierstrass data and the two null-curve representations sharing it.

A W-data pair (g, eta) determines a null curve in C^3 through

    phi = ((1 - g^2), i (1 + g^2), 2 g) * eta / 2,

and a null curve in SL(2,C) through the trace-free matrix form

    psi = [[g, -g^2], [1, -g]] * eta / sqrt(2).

Internally the pair is kept in a pole-safe normal form

    g = g_num / g_den,      eta = eta_core * g_den^2,

with g_num, g_den, eta_core quotient-free expression trees and eta_core
nonvanishing for pipeline-generated data.  In this form every derived field
is a polynomial combination of the three trees:

    phi  = eta_core/2 * (g_den^2 - g_num^2, i (g_den^2 + g_num^2), 2 g_num g_den)
    psi  = eta_core/sqrt(2) * [[g_num g_den, -g_num^2], [g_den^2, -g_num g_den]]
    lam  = (|g_num|^2 + |g_den|^2) |eta_core| / sqrt(2)

so evaluation stays finite even where the Gauss map passes through infinity
(eta picks up the matching zero automatically).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expressions import ExpPoly, HoloExpr, Poly, Prod, Quot, Sum, const, scaled, serialize_expr, deserialize_expr
from .grids import PolarGrid, default_grid

__all__ = [
    "WData",
    "MetricField",
    "DegenerateDataError",
    "phi_from_wdata",
    "psi_from_wdata",
    "phi_to_psi",
    "psi_to_phi",
    "wdata_from_phi",
    "reconstruct_phi",
    "conformal_factor",
    "rotate_frame",
    "rotation_from_su2",
    "su2_conjugate",
    "wdata_to_dict",
    "wdata_from_dict",
]

SQRT2 = np.sqrt(2.0)


class DegenerateDataError(ValueError):
    pass


@dataclass(frozen=True)
class WData:
    """Weierstrass pair in (g_num, g_den, eta_core) normal form."""

    g_num: HoloExpr
    g_den: HoloExpr
    eta_core: HoloExpr
    basepoint: complex = 0j

    @classmethod
    def from_g_eta(cls, g, eta, basepoint=0j):
        """Build from user-facing (g, eta dz) data.

        A top-level quotient in g is split into the normal form; eta then
        must carry the matching zeros, which is checked numerically through
        the immersion audit rather than symbolically.
        """
        if isinstance(g, (int, float, complex)):
            g = const(g)
        if isinstance(eta, (int, float, complex)):
            eta = const(eta)
        if isinstance(g, Quot):
            num, den = g.num, g.den
            eta_core = Quot(eta, Prod([den, den]))
        else:
            num, den = g, const(1.0)
            eta_core = eta
        return cls(num, den, eta_core, basepoint)

    # -- pointwise fields ---------------------------------------------------

    def _bundle(self, z):
        z = np.asarray(z, dtype=complex)
        memo = {}
        gn = self.g_num(z, memo)
        gd = self.g_den(z, memo)
        ec = self.eta_core(z, memo)
        return np.broadcast_arrays(gn + 0j, gd + 0j, ec + 0j)

    def g_at(self, z):
        gn, gd, _ = self._bundle(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            return gn / gd

    def eta_at(self, z):
        _, gd, ec = self._bundle(z)
        return ec * gd * gd

    def phi_at(self, z):
        """C^3 derivative vector, stacked along the last axis."""
        gn, gd, ec = self._bundle(z)
        gn2, gd2 = gn * gn, gd * gd
        half = 0.5 * ec
        return np.stack(
            [half * (gd2 - gn2), 1j * half * (gd2 + gn2), ec * gn * gd],
            axis=-1,
        )

    def psi_at(self, z):
        """Trace-free sl(2,C) matrix field, shape z.shape + (2, 2)."""
        gn, gd, ec = self._bundle(z)
        s = ec / SQRT2
        out = np.empty(np.shape(gn) + (2, 2), dtype=complex)
        out[..., 0, 0] = s * gn * gd
        out[..., 0, 1] = -s * gn * gn
        out[..., 1, 0] = s * gd * gd
        out[..., 1, 1] = -s * gn * gd
        return out

    def lambda_at(self, z):
        """Conformal factor of the induced metric ds^2 = lam^2 |dz|^2 / 2."""
        gn, gd, ec = self._bundle(z)
        return (np.abs(gn) ** 2 + np.abs(gd) ** 2) * np.abs(ec) / SQRT2

    def phi_prime_at(self, z):
        """Exact derivative of the phi vector (for null checks of compositions)."""
        z = np.asarray(z, dtype=complex)
        memo = {}
        gn = self.g_num(z, memo)
        gd = self.g_den(z, memo)
        ec = self.eta_core(z, memo)
        dgn = self.g_num.derivative()(z, memo)
        dgd = self.g_den.derivative()(z, memo)
        dec = self.eta_core.derivative()(z, memo)
        gn2, gd2 = gn * gn, gd * gd
        dgn2, dgd2 = 2 * gn * dgn, 2 * gd * dgd
        c1 = 0.5 * (dec * (gd2 - gn2) + ec * (dgd2 - dgn2))
        c2 = 0.5j * (dec * (gd2 + gn2) + ec * (dgd2 + dgn2))
        c3 = dec * gn * gd + ec * (dgn * gd + gn * dgd)
        return np.stack([c1, c2, c3], axis=-1)

    def audit_immersion(self, grid: PolarGrid | None = None, floor=1e-12):
        """Minimum of the conformal factor over the grid; raises when degenerate."""
        grid = grid or default_grid()
        lam = self.lambda_at(grid.nodes())
        m = float(np.min(lam))
        if not np.isfinite(m) or m <= floor:
            raise DegenerateDataError(f"conformal factor floor violated: min = {m:.3e}")
        return m


@dataclass(frozen=True)
class MetricField:
    grid: PolarGrid
    values: np.ndarray = field(repr=False)

    @property
    def min(self):
        return float(np.min(self.values))

    @property
    def max(self):
        return float(np.max(self.values))


def phi_from_wdata(w: WData, z):
    phi = w.phi_at(z)
    if not np.all(np.isfinite(phi)):
        raise DegenerateDataError("phi evaluation hit an undeclared singularity")
    return phi


def psi_from_wdata(w: WData, z):
    psi = w.psi_at(z)
    if not np.all(np.isfinite(psi)):
        raise DegenerateDataError("psi evaluation hit an undeclared singularity")
    return psi


def phi_to_psi(phi):
    """Vector-to-matrix correspondence; preserves the Frobenius/Hermitian norm."""
    phi = np.asarray(phi, dtype=complex)
    out = np.empty(phi.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = phi[..., 2]
    out[..., 0, 1] = phi[..., 0] + 1j * phi[..., 1]
    out[..., 1, 0] = phi[..., 0] - 1j * phi[..., 1]
    out[..., 1, 1] = -phi[..., 2]
    return out / SQRT2


def psi_to_phi(psi):
    # psi12 = (phi1 + i phi2)/sqrt2, psi21 = (phi1 - i phi2)/sqrt2, psi11 = phi3/sqrt2
    psi = np.asarray(psi, dtype=complex)
    phi1 = (psi[..., 0, 1] + psi[..., 1, 0]) * (SQRT2 / 2)
    phi2 = (psi[..., 0, 1] - psi[..., 1, 0]) * (SQRT2 / 2) / 1j
    phi3 = psi[..., 0, 0] * SQRT2
    return np.stack([phi1, phi2, phi3], axis=-1)


def wdata_from_phi(phi, tol=1e-12):
    """Pointwise inversion to (g, eta) samples.

    Fails when eta = phi1 - i*phi2 vanishes identically (data that cannot be
    put in this chart).
    """
    phi = np.asarray(phi, dtype=complex)
    eta = phi[..., 0] - 1j * phi[..., 1]
    scale = np.max(np.abs(phi))
    if np.max(np.abs(eta)) <= tol * max(scale, 1.0):
        raise DegenerateDataError("phi1 - i*phi2 vanishes: degenerate chart")
    with np.errstate(divide="ignore", invalid="ignore"):
        g = phi[..., 2] / eta
    return g, eta


def reconstruct_phi(g, eta):
    g = np.asarray(g, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    return np.stack(
        [0.5 * (1 - g * g) * eta, 0.5j * (1 + g * g) * eta, g * eta], axis=-1
    )


def conformal_factor(w: WData, grid: PolarGrid, floor=1e-12):
    lam = w.lambda_at(grid.nodes())
    m = float(np.min(lam))
    if not np.isfinite(m) or m <= floor:
        raise DegenerateDataError(f"degenerate immersion: min lambda = {m:.3e}")
    return MetricField(grid, lam)


def rotate_frame(phi, rot, tol=1e-10):
    """Apply a real rotation componentwise (complex-linearly) to phi vectors."""
    rot = np.asarray(rot, dtype=float)
    if rot.shape != (3, 3) or np.max(np.abs(rot @ rot.T - np.eye(3))) > tol or np.linalg.det(rot) < 0:
        raise ValueError("rotation must be a proper orthogonal 3x3 matrix")
    phi = np.asarray(phi, dtype=complex)
    return phi @ rot.T


def rotation_from_su2(a):
    """3x3 rotation induced on phi vectors by psi -> a psi a*.

    Extracted numerically by conjugating the three basis matrices of the
    vector-matrix correspondence; convention-proof and exactly orthogonal to
    rounding.
    """
    a = np.asarray(a, dtype=complex)
    cols = []
    for k in range(3):
        e = np.zeros(3, dtype=complex)
        e[k] = 1.0
        m = phi_to_psi(e)
        cols.append(psi_to_phi(a @ m @ a.conj().T).real)
    return np.stack(cols, axis=-1)


def su2_conjugate(w: WData, a, tol=1e-10):
    """W-data of the conjugated matrix form a psi a*, a in SU(2).

    For a = [[p, q], [-conj(q), conj(p)]] the Gauss map undergoes the Moebius
    map g -> (p g + q) / (conj(p) - conj(q) g) while eta picks up the squared
    denominator; in normal form this touches only the g trees:

        g_num' = p g_num + q g_den
        g_den' = conj(p) g_den - conj(q) g_num
        eta_core' = eta_core
    """
    a = np.asarray(a, dtype=complex)
    p, q = a[0, 0], a[0, 1]
    if abs(a[1, 0] + q.conjugate()) > tol or abs(a[1, 1] - p.conjugate()) > tol:
        raise ValueError("matrix is not in SU(2)")
    g_num = Sum([scaled(p, w.g_num), scaled(q, w.g_den)])
    g_den = Sum([scaled(p.conjugate(), w.g_den), scaled(-q.conjugate(), w.g_num)])
    return WData(g_num, g_den, w.eta_core, w.basepoint)


# -- serialization ----------------------------------------------------------

def wdata_to_dict(w: WData):
    return {
        "schema": 1,
        "g_num": serialize_expr(w.g_num),
        "g_den": serialize_expr(w.g_den),
        "eta_core": serialize_expr(w.eta_core),
        "basepoint": [repr(w.basepoint.real), repr(w.basepoint.imag)],
    }


def wdata_from_dict(d):
    bp = complex(float(d["basepoint"][0]), float(d["basepoint"][1]))
    return WData(
        deserialize_expr(d["g_num"]),
        deserialize_expr(d["g_den"]),
        deserialize_expr(d["eta_core"]),
        bp,
    )
