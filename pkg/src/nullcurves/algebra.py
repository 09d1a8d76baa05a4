"""2x2 complex matrices and hyperbolic geometry in the hyperboloid model.

Conventions
-----------
* Matrix norm: |A| = sqrt(trace(A A*)) = Frobenius.
* Minkowski pairing: <x, y> = x0*y0 - x1*y1 - x2*y2 - x3*y3.  Points of
  hyperbolic 3-space are 4-vectors with <x, x> = 1, x0 > 0; the pairing of
  two such points is cosh of their distance.
* Hermitian matrices and 4-vectors are identified by
  (x0, x1, x2, x3)  <->  [[x0+x3, x1+i*x2], [x1-i*x2, x0-x3]].
* A totally geodesic plane is the zero set of the pairing with a unit
  spacelike normal n (<n, n> = -1 in this signature).

All functions are pure and all values immutable; arrays are never mutated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ORIGIN",
    "matrix_norm",
    "check_sl2",
    "random_sl2",
    "herm_to_minkowski",
    "minkowski_to_herm",
    "lorentz",
    "to_h3",
    "check_h3",
    "dist_h3",
    "norm_dist_check",
    "act_h3",
    "GeodesicPlane",
    "plane_through_perp",
    "dist_to_plane",
    "perpendicular_foot",
    "geodesic_tangent",
    "geodesic_point",
    "foot_on_geodesic",
    "align_su2",
    "plane_angle",
    "su2_from_axis_angle",
]

SL2_TOL = 1e-9
H3_TOL = 1e-9

ORIGIN = np.array([1.0, 0.0, 0.0, 0.0])

_ID2 = np.eye(2, dtype=complex)


def matrix_norm(a):
    """Frobenius norm of a 2x2 (or batched ...x2x2) complex matrix."""
    a = np.asarray(a)
    return np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))


def check_sl2(a, tol=SL2_TOL):
    """Raise if det(a) is not 1 within tol; return a unchanged."""
    a = np.asarray(a, dtype=complex)
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    err = np.max(np.abs(det - 1.0))
    if err > tol:
        raise ValueError(f"matrix is not in SL(2,C): |det-1| = {err:.3e}")
    return a


def random_sl2(rng, n=None, spread=1.0):
    """Seeded random SL(2,C) samples (Gaussian entries, det-normalized)."""
    shape = (2, 2) if n is None else (n, 2, 2)
    while True:
        a = spread * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        if np.all(np.abs(det) > 1e-6):
            break
    return a / np.sqrt(det)[..., None, None]


def herm_to_minkowski(h):
    """Hermitian 2x2 (or batch) -> Minkowski 4-vector(s)."""
    h = np.asarray(h)
    x0 = 0.5 * (h[..., 0, 0] + h[..., 1, 1]).real
    x3 = 0.5 * (h[..., 0, 0] - h[..., 1, 1]).real
    x1 = h[..., 0, 1].real
    x2 = h[..., 0, 1].imag
    return np.stack([x0, x1, x2, x3], axis=-1)


def minkowski_to_herm(x):
    x = np.asarray(x, dtype=float)
    h = np.empty(x.shape[:-1] + (2, 2), dtype=complex)
    h[..., 0, 0] = x[..., 0] + x[..., 3]
    h[..., 1, 1] = x[..., 0] - x[..., 3]
    h[..., 0, 1] = x[..., 1] + 1j * x[..., 2]
    h[..., 1, 0] = x[..., 1] - 1j * x[..., 2]
    return h


def lorentz(p, q):
    """Minkowski pairing x0*y0 - x1*y1 - x2*y2 - x3*y3 (broadcasting)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return p[..., 0] * q[..., 0] - np.sum(p[..., 1:] * q[..., 1:], axis=-1)


def to_h3(a):
    """Project a in SL(2,C) to the hyperboloid: a a* in Minkowski coordinates."""
    a = np.asarray(a, dtype=complex)
    h = a @ np.swapaxes(a, -1, -2).conj()
    return herm_to_minkowski(h)


def check_h3(p, tol=H3_TOL):
    p = np.asarray(p, dtype=float)
    res = np.max(np.abs(lorentz(p, p) - 1.0))
    if res > tol or np.any(p[..., 0] <= 0):
        raise ValueError(f"point is not on the hyperboloid: residual {res:.3e}")
    return p


def dist_h3(p, q):
    """Hyperbolic distance; the pairing is clamped at 1 against rounding."""
    return np.arccosh(np.maximum(lorentz(p, q), 1.0))


def norm_dist_check(a, b):
    """Residual of |a^-1 b|^2 = 2 cosh dist(aa*, bb*); must vanish on SL(2,C)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ainv = np.empty_like(a)
    ainv[..., 0, 0] = a[..., 1, 1]
    ainv[..., 1, 1] = a[..., 0, 0]
    ainv[..., 0, 1] = -a[..., 0, 1]
    ainv[..., 1, 0] = -a[..., 1, 0]
    lhs = matrix_norm(ainv @ b) ** 2
    rhs = 2.0 * np.cosh(dist_h3(to_h3(a), to_h3(b)))
    return np.abs(lhs - rhs)


def act_h3(a, p):
    """Isometric action p -> a p a* of SL(2,C) on the hyperboloid."""
    return herm_to_minkowski(
        np.asarray(a, dtype=complex) @ minkowski_to_herm(p) @ np.swapaxes(np.asarray(a, dtype=complex), -1, -2).conj()
    )


@dataclass(frozen=True)
class GeodesicPlane:
    """Totally geodesic plane {x : <x, normal> = 0}, normal unit spacelike."""

    normal: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(lorentz(n, n) + 1.0) > H3_TOL:
            raise ValueError("plane normal must be unit spacelike")
        object.__setattr__(self, "normal", n)

    def contains(self, p, tol=1e-8):
        return abs(lorentz(np.asarray(p, float), self.normal)) <= tol


def geodesic_tangent(p, q):
    """Unit tangent at p of the geodesic from p toward q (<t, t> = -1)."""
    d = float(dist_h3(p, q))
    if d < 1e-14:
        raise ValueError("tangent direction undefined for coincident points")
    t = (np.asarray(q, float) - np.cosh(d) * np.asarray(p, float)) / np.sinh(d)
    return t


def geodesic_point(p, t, s):
    """Point at arclength s along the geodesic from p with unit tangent t."""
    return np.cosh(s) * np.asarray(p, float) + np.sinh(s) * np.asarray(t, float)


def plane_through_perp(p):
    """Plane through p perpendicular to the geodesic from the origin to p."""
    t = geodesic_tangent(ORIGIN, p)
    d = float(dist_h3(ORIGIN, p))
    # tangent of the same geodesic transported to p; spacelike unit by c^2-s^2
    n = np.sinh(d) * ORIGIN + np.cosh(d) * t
    return GeodesicPlane(n)


def dist_to_plane(p, plane):
    return np.arcsinh(np.abs(lorentz(np.asarray(p, float), plane.normal)))


def perpendicular_foot(p, plane):
    """Closest point of the plane; equals p when p already lies on it."""
    p = np.asarray(p, dtype=float)
    c = lorentz(p, plane.normal)
    w = p + c * plane.normal  # <w, normal> = 0 since <n, n> = -1
    return w / np.sqrt(lorentz(w, w))


def foot_on_geodesic(p, base, t):
    """Foot of perpendicular from p onto the geodesic s -> cosh(s) base + sinh(s) t."""
    num = lorentz(p, t)
    den = lorentz(p, base)
    s = np.arctanh(np.clip(num / den, -1 + 1e-15, 1 - 1e-15))
    return geodesic_point(base, t, s)


def align_su2(p, tol=1e-12):
    """Unitary a with a p a* on the x0x3-axis, x3 >= 0.

    Computed from the eigendecomposition of the Hermitian matrix of p: with
    eigenvalues in decreasing order the conjugated matrix is diagonal, which
    is exactly the x1 = x2 = 0, x3 >= 0 normal form.  Returns the identity
    for points already aligned (in particular for the origin).
    """
    p = np.asarray(p, dtype=float)
    if np.hypot(p[1], p[2]) <= tol and p[3] >= -tol:
        return _ID2.copy()
    h = minkowski_to_herm(p)
    vals, vecs = np.linalg.eigh(h)  # ascending
    u = vecs[:, ::-1]  # columns: eigenvectors for descending eigenvalues
    a = u.conj().T
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    a = a / np.sqrt(det)
    return a


def plane_angle(plane1, plane2, at, tol=1e-8):
    """Dihedral angle in [0, pi/2] between two planes through the point `at`."""
    at = np.asarray(at, dtype=float)
    for pl in (plane1, plane2):
        if not pl.contains(at, tol):
            raise ValueError("plane does not pass through the given point")
    n1, n2 = plane1.normal, plane2.normal
    # normals are tangent at `at`; tangent metric is -<,>
    c = -lorentz(n1, n2)
    c = np.clip(np.abs(c), 0.0, 1.0)
    return float(np.arccos(c))


_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def su2_from_axis_angle(axis, angle):
    """SU(2) element exp(-i*(angle/2)*(axis . sigma)) for a unit 3-vector axis."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    ns = sum(axis[k] * _SIGMA[k] for k in range(3))
    return np.cos(angle / 2) * _ID2 - 1j * np.sin(angle / 2) * ns
