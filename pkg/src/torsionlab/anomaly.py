"""Predicted expansion coefficients and their geometric ingredients.

The prediction (a0, a1, b) is a pure function of combinatorial and
topological inputs; it never reads spectral data, so comparisons against
fitted coefficients are genuinely independent.

a0 = log(Morse-theoretic torsion) - (1/2) * theta-psi pairing
a1 = -rank * integral of f against the Euler density + chi'
b  = (n/4) chi - (1/2) chi'
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .errors import InputError

PROVENANCE = ("computed", "user-supplied", "vanishes-by-assumption")


@dataclass(frozen=True)
class PredictionInputs:
    """Everything the coefficient formulas consume, with provenance flags."""

    n: int
    rank: int
    chi: int
    chi_prime: int
    tilde_chi_prime: float
    log_rho_morse: float
    f_euler_integral: float = 0.0
    theta_psi_integral: float | None = 0.0
    provenance: dict | None = None

    def __post_init__(self):
        if self.n == 1 and self.f_euler_integral != 0.0:
            raise InputError("dimension 1 forces a vanishing Euler density integral")
        prov = dict(self.provenance or {})
        for key in ("f_euler_integral", "theta_psi_integral"):
            prov.setdefault(
                key, "vanishes-by-assumption" if not (getattr(self, key) or 0) else "user-supplied"
            )
            if prov[key] not in PROVENANCE:
                raise InputError(f"unknown provenance {prov[key]!r} for {key}")
        object.__setattr__(self, "provenance", prov)


@dataclass(frozen=True)
class Prediction:
    """Predicted (a0, a1, b); a0 is None when its pairing was not evaluable."""

    a0: float | None
    a1: float
    b: float

    def as_dict(self):
        return {"a0": self.a0, "a1": self.a1, "b": self.b}


def predict_coefficients(inputs: PredictionInputs) -> Prediction:
    """Assemble (a0, a1, b) from the closed-form expressions."""
    if inputs.theta_psi_integral is None:
        a0 = None
    else:
        a0 = inputs.log_rho_morse - 0.5 * inputs.theta_psi_integral
    a1 = -inputs.rank * inputs.f_euler_integral + inputs.chi_prime
    b = inputs.n / 4.0 * inputs.chi - 0.5 * inputs.chi_prime
    return Prediction(a0=a0, a1=float(a1), b=float(b))


def prediction_report(inputs: PredictionInputs, prediction: Prediction) -> dict:
    """Machine-readable report: inputs echoed, coefficients, provenance flags."""
    body = asdict(inputs)
    body.pop("provenance")
    return {
        "inputs": body,
        "provenance": dict(inputs.provenance),
        "coefficients": prediction.as_dict(),
    }


def save_prediction(inputs, prediction, path):
    with open(path, "w") as fh:
        json.dump(prediction_report(inputs, prediction), fh, indent=2)


# ---------------------------------------------------------------------------
# theta form


def theta_form(metric_samples, length, rank=None) -> np.ndarray:
    """Trace 1-form of a fiber metric along a periodic parameter grid.

    ``metric_samples`` has shape ``(m, r, r)``: SPD matrices at uniform
    points of a circle of circumference ``length`` in a flat frame.  Returns
    the samples of ``trace(g^{-1} dg/dx)``; a parallel (constant) metric
    gives identically zero.
    """
    g = np.asarray(metric_samples, dtype=float)
    if g.ndim == 1:
        g = g[:, None, None]
    if g.ndim != 3 or g.shape[1] != g.shape[2]:
        raise InputError("metric samples must have shape (m, r, r)")
    if rank is not None and g.shape[1] != rank:
        raise InputError(f"expected rank {rank}, got {g.shape[1]}")
    m = g.shape[0]
    for j in range(m):
        if not np.allclose(g[j], g[j].T):
            raise InputError(f"metric sample {j} is not symmetric")
        if np.linalg.eigvalsh(g[j])[0] <= 0:
            raise InputError(f"metric sample {j} is not positive-definite")
    # spectral derivative along the periodic grid, entrywise
    k = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0:
        k[m // 2] = 0.0
    mult = 2j * np.pi * k / length
    dg = np.real(np.fft.ifft(mult[:, None, None] * np.fft.fft(g, axis=0), axis=0))
    return np.array([np.trace(np.linalg.solve(g[j], dg[j])) for j in range(m)])


# ---------------------------------------------------------------------------
# 2-D Euler density utility


@dataclass(frozen=True, eq=False, repr=False)
class SurfaceGrid:
    """First fundamental form sampled on a (u, v) parameter grid.

    ``u`` runs over rows, ``v`` over columns; ``v`` is always periodic, and
    ``u`` is periodic for torus-like surfaces or pole-capped (cell-centered
    grid on an open interval) for sphere-like ones.
    """

    u: np.ndarray
    v: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    u_periodic: bool
    u_span: float  # full parameter length in u, including any pole caps


def sphere_grid(m_u=512, m_v=256) -> SurfaceGrid:
    """Round unit sphere in colatitude/longitude, cell-centered in colatitude."""
    du = np.pi / m_u
    u = (np.arange(m_u) + 0.5) * du
    v = np.arange(m_v) * (2.0 * np.pi / m_v)
    uu = np.broadcast_to(u[:, None], (m_u, m_v)).copy()
    return SurfaceGrid(
        u=u, v=v,
        E=np.ones((m_u, m_v)),
        F=np.zeros((m_u, m_v)),
        G=np.sin(uu) ** 2,
        u_periodic=False,
        u_span=np.pi,
    )


def flat_torus_grid(a=1.0, b=1.0, m_u=128, m_v=128) -> SurfaceGrid:
    u = np.arange(m_u) * (a / m_u)
    v = np.arange(m_v) * (b / m_v)
    return SurfaceGrid(
        u=u, v=v,
        E=np.ones((m_u, m_v)),
        F=np.zeros((m_u, m_v)),
        G=np.ones((m_u, m_v)),
        u_periodic=True,
        u_span=a,
    )


def _d_du(a, du, periodic):
    if periodic:
        return (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2 * du)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2 * du)
    out[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * du)
    out[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * du)
    return out


def _d_dv(a, dv):
    return (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) / (2 * dv)


def gauss_curvature(grid: SurfaceGrid) -> np.ndarray:
    """Gauss curvature from the first fundamental form (Brioschi formula)."""
    E, F, G = grid.E, grid.F, grid.G
    du = grid.u[1] - grid.u[0] if grid.u.size > 1 else 1.0
    dv = grid.v[1] - grid.v[0] if grid.v.size > 1 else 1.0
    Eu, Ev = _d_du(E, du, grid.u_periodic), _d_dv(E, dv)
    Fu, Fv = _d_du(F, du, grid.u_periodic), _d_dv(F, dv)
    Gu, Gv = _d_du(G, du, grid.u_periodic), _d_dv(G, dv)
    Evv = _d_dv(Ev, dv)
    Guu = _d_du(Gu, du, grid.u_periodic)
    Fuv = _d_dv(Fu, dv)
    m1 = np.stack(
        [
            np.stack([-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev], axis=-1),
            np.stack([Fv - 0.5 * Gu, E, F], axis=-1),
            np.stack([0.5 * Gv, F, G], axis=-1),
        ],
        axis=-2,
    )
    m2 = np.stack(
        [
            np.stack([np.zeros_like(E), 0.5 * Ev, 0.5 * Gu], axis=-1),
            np.stack([0.5 * Ev, E, F], axis=-1),
            np.stack([0.5 * Gu, F, G], axis=-1),
        ],
        axis=-2,
    )
    denom = (E * G - F**2) ** 2
    return (np.linalg.det(m1) - np.linalg.det(m2)) / denom


def f_euler_integral_2d(grid: SurfaceGrid, f_samples, refine_check=True) -> float:
    """Quadrature of f times the Euler density K/(2 pi) dA on a closed surface.

    With ``f = 1`` the result is the Euler characteristic, which normalizes
    the density (the Gauss-Bonnet convention).  Raises on non-convergence
    under coarsening comparison when ``refine_check`` is set.
    """
    f = np.asarray(f_samples, dtype=float)
    if f.shape != grid.E.shape:
        raise InputError("f samples must match the metric grid")
    k = gauss_curvature(grid)
    area_density = np.sqrt(grid.E * grid.G - grid.F**2)
    du = grid.u_span / grid.u.size
    dv = (grid.v[1] - grid.v[0]) if grid.v.size > 1 else 2 * np.pi
    integrand = f * k / (2.0 * np.pi) * area_density
    total = float(np.sum(integrand) * du * dv)
    if refine_check and grid.u.size >= 8 and grid.v.size >= 8:
        coarse = float(np.sum(integrand[:: 2, :: 2]) * (2 * du) * (2 * dv))
        if abs(total - coarse) > 1e-3 * (1.0 + abs(total)):
            raise InputError(
                f"Euler-density quadrature not converged: {total:.6g} vs {coarse:.6g}"
                " on the coarsened grid"
            )
    return total
