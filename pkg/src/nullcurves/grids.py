"""Polar sample grids on the closed unit disc."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PolarGrid", "default_grid", "refined_grid"]


@dataclass(frozen=True)
class PolarGrid:
    """Node layout: radii x angles, radii[0] == 0 collapses to the center."""

    radii: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        t = np.asarray(self.thetas, dtype=float)
        if r[0] < 0 or np.any(np.diff(r) <= 0) or r[-1] > 1 + 1e-12:
            raise ValueError("radii must be increasing in [0, 1]")
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "thetas", t)

    @property
    def shape(self):
        return (len(self.radii), len(self.thetas))

    def nodes(self):
        """Complex node array of shape (n_r, n_theta)."""
        return self.radii[:, None] * np.exp(1j * self.thetas)[None, :]


def default_grid(n_r=256, n_theta=512, r_max=1.0):
    radii = np.linspace(0.0, r_max, n_r + 1)
    thetas = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    return PolarGrid(radii, thetas)


def refined_grid(inner_radius, fine_step, n_theta=512, coarse=64):
    """Coarse radii inside `inner_radius`, uniform `fine_step` outside.

    Used to resolve thin annular features near the boundary: the fine band
    gets nodes at every multiple of fine_step, which callers align with the
    feature radii they care about.
    """
    inner = np.linspace(0.0, inner_radius, coarse, endpoint=False)
    n_fine = int(round((1.0 - inner_radius) / fine_step))
    outer = inner_radius + fine_step * np.arange(n_fine + 1)
    outer[-1] = 1.0
    radii = np.concatenate([inner, outer])
    thetas = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    return PolarGrid(radii, thetas)
