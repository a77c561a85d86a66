"""Minmod limiters and the slope fields used by the central schemes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoundaryCondition, extend_array


def minmod(a, b):
    """Classic two-argument minmod: smaller-magnitude argument if signs agree, else 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.where(a * b > 0.0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def minmod3(a, b, c):
    """Three-argument minmod: sign-common minimum magnitude, zero otherwise."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    sa, sb, sc = np.sign(a), np.sign(b), np.sign(c)
    same = (sa == sb) & (sb == sc) & (sa != 0.0)
    mag = np.minimum(np.abs(a), np.minimum(np.abs(b), np.abs(c)))
    return np.where(same, sa * mag, 0.0)


@dataclass(frozen=True)
class ClipConfig:
    """Optional magnitude clip for limited differences.

    When enabled, every limited difference is additionally capped at
    ``C * dx**delta`` (signed like the backward difference), which bounds the
    reconstruction jumps independently of the data.  Disabled by default.
    """

    enabled: bool = False
    C: float = 1.0
    delta: float = 0.5

    def cap(self, dx: float) -> float:
        return self.C * dx**self.delta


NO_CLIP = ClipConfig()


def limited_difference(fwd, bwd, dx: float, clip: ClipConfig = NO_CLIP):
    """Limited slope from one-sided differences (not yet divided by dx on input)."""
    if clip.enabled:
        cap = clip.cap(dx)
        d = minmod3(fwd, bwd, np.sign(bwd) * cap)
    else:
        d = minmod(fwd, bwd)
    return d / dx


def slopes_of_extended(a_ext: np.ndarray, dx: float, clip: ClipConfig = NO_CLIP):
    """Limited slopes of an already ghost-extended array; loses one entry per side."""
    fwd = a_ext[..., 2:] - a_ext[..., 1:-1]
    bwd = a_ext[..., 1:-1] - a_ext[..., :-2]
    return limited_difference(fwd, bwd, dx, clip)


def cell_slopes(
    values: np.ndarray,
    dx: float,
    bc: BoundaryCondition,
    clip: ClipConfig = NO_CLIP,
    extend: int = 0,
) -> np.ndarray:
    """Minmod slopes of cell averages, optionally on an extended index range."""
    a = extend_array(np.asarray(values, dtype=float), extend + 1, extend + 1, bc)
    return slopes_of_extended(a, dx, clip)


def staggered_slopes(
    staggered: np.ndarray,
    dx: float,
    bc: BoundaryCondition,
    clip: ClipConfig = NO_CLIP,
) -> np.ndarray:
    """Minmod slopes of staggered (interface-centred) averages."""
    a = extend_array(np.asarray(staggered, dtype=float), 1, 1, bc)
    return slopes_of_extended(a, dx, clip)


def flux_slopes_v1(
    model,
    values: np.ndarray,
    nonlocal_field: np.ndarray,
    dx: float,
    bc: BoundaryCondition,
    clip: ClipConfig = NO_CLIP,
) -> np.ndarray:
    """Limited slopes of the discrete flux, species by species.

    The flux is evaluated cellwise from the state and the nonlocal field and
    the minmod limiter is applied to its one-sided differences.  The ghost
    flux values come from extending both inputs by ``bc``.
    """
    v = extend_array(np.asarray(values, dtype=float), 1, 1, bc)
    r = extend_array(np.asarray(nonlocal_field, dtype=float), 1, 1, bc)
    out = np.empty((v.shape[0], v.shape[1] - 2))
    for k in range(v.shape[0]):
        fk = model.flux[k](v[k], r)
        out[k] = slopes_of_extended(fk, dx, clip)
    return out


def flux_slopes_v2(
    model,
    values: np.ndarray,
    nonlocal_field: np.ndarray,
    nonlocal_dx: np.ndarray,
    dx: float,
    bc: BoundaryCondition,
) -> np.ndarray:
    """Product-rule flux slopes for fluxes of the form F_k = g_k(rho) V_k(R).

    sigma_k = minmod(dg_k) V_k(R) + g_k(rho) sum_l dV_k/dR_l * dR_l/dx,
    using the limited difference of g and the quadrature-based space
    derivative of the nonlocal field.  No clip is applied here.
    """
    if model.product_form is None:
        raise ValueError(f"model {model.name!r} has no product-form flux split")
    v = extend_array(np.asarray(values, dtype=float), 1, 1, bc)
    r = np.asarray(nonlocal_field, dtype=float)
    dr = np.asarray(nonlocal_dx, dtype=float)
    out = np.empty((v.shape[0], v.shape[1] - 2))
    for k in range(v.shape[0]):
        g, V, grad_V = model.product_form[k]
        gk = g(v[k])
        dg = slopes_of_extended(gk, dx)
        out[k] = dg * V(r) + g(v[k][1:-1]) * (grad_V(r) * dr).sum(axis=0)
    return out
