"""Circle geometry for the spectral pipeline.

A :class:`CircleModel` is a flat rank-r bundle over a circle of circumference
L, described by a holonomy matrix applied across the seam, a constant SPD
fiber metric, and a Morse profile with exactly two critical points.  The
profile is either the built-in ``one-minus-cos`` shape or trigonometric
interpolation of user samples.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import sqrtm

from .errors import InputError

MIN_GRID = 64
# Circumference for which one-minus-cos has unit Hessians at both critical
# points: f''(0) = 2 pi^2 / L^2 = 1.
NORMAL_FORM_LENGTH = float(np.pi * np.sqrt(2.0))


class TrigProfile:
    """Trigonometric interpolation of periodic samples, with derivatives.

    Samples are taken at ``x_j = j * L / n`` (no duplicated endpoint).  The
    unpaired Nyquist mode of even sample counts is dropped; a resolved smooth
    profile carries nothing there.
    """

    def __init__(self, samples, length):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 1 or samples.size < 8:
            raise InputError("profile samples must be a 1-D array of at least 8 values")
        n = samples.size
        coeff = np.fft.fft(samples) / n
        if n % 2 == 0:
            coeff[n // 2] = 0.0
        self.length = float(length)
        self._coeff = coeff
        self._wavenumbers = np.fft.fftfreq(n, d=1.0 / n)

    def __call__(self, x, deriv=0):
        x = np.asarray(x, dtype=float)
        ik = 2j * np.pi * self._wavenumbers / self.length
        coeff = self._coeff * ik**deriv
        return np.real(np.exp(np.multiply.outer(x, ik)) @ coeff)


class OneMinusCosProfile:
    """f(x) = (1 - cos(2 pi x / L)) / 2: min 0 at x = 0, max 1 at x = L/2."""

    def __init__(self, length):
        self.length = float(length)

    def __call__(self, x, deriv=0):
        w = 2.0 * np.pi / self.length
        x = np.asarray(x, dtype=float)
        if deriv == 0:
            return (1.0 - np.cos(w * x)) / 2.0
        phase = w * x + (deriv - 1) * np.pi / 2.0
        return (w**deriv) * np.sin(phase) / 2.0


@dataclass(frozen=True, eq=False, repr=False)
class CircleModel:
    """Flat bundle over the circle with a two-critical-point Morse profile."""

    L: float
    N: int
    rank: int
    holonomy: np.ndarray
    fiber_metric: np.ndarray
    f_kind: str
    f_samples: np.ndarray | None
    profile: object
    parallel: bool
    x_min: float
    x_max: float

    def __init__(self, L, N, holonomy, fiber_metric=None, f_kind="one-minus-cos",
                 f_samples=None):
        L = float(L)
        N = int(N)
        if L <= 0:
            raise InputError("circumference must be positive")
        if N < MIN_GRID or N % 2:
            raise InputError(f"grid size must be even and >= {MIN_GRID}, got {N}")
        holonomy = np.asarray(holonomy, dtype=float)
        if holonomy.ndim != 2 or holonomy.shape[0] != holonomy.shape[1]:
            raise InputError("holonomy must be a square matrix")
        rank = holonomy.shape[0]
        if abs(np.linalg.det(holonomy)) < 1e-300:
            raise InputError("holonomy must be invertible")
        if fiber_metric is None:
            fiber_metric = np.eye(rank)
        fiber_metric = np.asarray(fiber_metric, dtype=float).reshape(rank, rank)
        if not np.allclose(fiber_metric, fiber_metric.T):
            raise InputError("fiber metric must be symmetric")
        if np.linalg.eigvalsh(fiber_metric)[0] <= 0:
            raise InputError("fiber metric must be positive-definite")
        if f_kind == "one-minus-cos":
            profile = OneMinusCosProfile(L)
        elif f_kind == "samples":
            profile = TrigProfile(f_samples, L)
        else:
            raise InputError(f"unknown profile kind {f_kind!r}")
        # orthogonality of the holonomy w.r.t. the fiber metric (parallel case)
        g = fiber_metric
        parallel = bool(
            np.linalg.norm(holonomy.T @ g @ holonomy - g) <= 1e-10 * (np.linalg.norm(g) + 1.0)
        )
        x_min, x_max = _locate_critical_points(profile, L)
        for a in (holonomy, fiber_metric):
            a.setflags(write=False)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "holonomy", holonomy)
        object.__setattr__(self, "fiber_metric", fiber_metric)
        object.__setattr__(self, "f_kind", f_kind)
        object.__setattr__(
            self,
            "f_samples",
            None if f_samples is None else np.asarray(f_samples, dtype=float),
        )
        object.__setattr__(self, "profile", profile)
        object.__setattr__(self, "parallel", parallel)
        object.__setattr__(self, "x_min", x_min)
        object.__setattr__(self, "x_max", x_max)

    def __repr__(self):
        return (
            f"CircleModel(L={self.L:.6g}, N={self.N}, rank={self.rank}, "
            f"kind={self.f_kind!r}, parallel={self.parallel})"
        )

    # profile access -------------------------------------------------------

    def f(self, x):
        return self.profile(x)

    def fp(self, x):
        return self.profile(x, deriv=1)

    def fpp(self, x):
        return self.profile(x, deriv=2)

    @property
    def f_range(self) -> float:
        return float(self.f(self.x_max) - self.f(self.x_min))

    @property
    def self_indexing(self) -> bool:
        return (
            abs(self.f(self.x_min)) < 1e-9 and abs(self.f(self.x_max) - 1.0) < 1e-9
        )

    # bundle structure ------------------------------------------------------

    def orthogonal_holonomy(self) -> np.ndarray:
        """Holonomy conjugated into the fiber-orthonormal frame.

        Orthogonal exactly when the fiber metric is parallel.
        """
        s = np.real(sqrtm(self.fiber_metric))
        return s @ self.holonomy @ np.linalg.inv(s)

    def require_parallel(self):
        if not self.parallel:
            raise InputError(
                "spectral pipeline requires a parallel fiber metric"
                " (holonomy orthogonal for the fiber metric)"
            )

    def sector_angles(self) -> np.ndarray:
        """Angles of the holonomy eigenvalues, one per fiber dimension."""
        self.require_parallel()
        vals = np.linalg.eigvals(self.orthogonal_holonomy())
        angles = np.sort(np.angle(vals))
        # orthogonal matrices have unimodular spectra; snap tiny phases to 0
        angles[np.abs(angles) < 1e-12] = 0.0
        return angles

    def flat_betti(self) -> tuple:
        """(b_0, b_1) of the flat bundle: the holonomy-invariant dimension, twice."""
        k = int(np.sum(np.abs(self.sector_angles()) < 1e-12))
        return (k, k)

    def grid(self, n=None):
        n = self.N if n is None else int(n)
        h = self.L / n
        nodes = np.arange(n) * h
        mids = nodes + h / 2.0
        return nodes, mids, h


def _locate_critical_points(profile, L):
    xs = np.arange(16384) * (L / 16384)
    f = profile(xs)
    slopes = np.sign(np.roll(f, -1) - f)
    extrema = int(np.sum(slopes * np.roll(slopes, -1) < 0))
    if extrema != 2:
        raise InputError(
            f"profile must have exactly two critical points (found {extrema} extrema)"
        )
    i_min, i_max = int(np.argmin(f)), int(np.argmax(f))
    x_min, x_max = xs[i_min], xs[i_max]
    # one Newton polish each; the dense scan already brackets the roots
    for _ in range(3):
        d2 = profile(np.array([x_min]), deriv=2)[0]
        if abs(d2) > 1e-12:
            x_min -= profile(np.array([x_min]), deriv=1)[0] / d2
        d2 = profile(np.array([x_max]), deriv=2)[0]
        if abs(d2) > 1e-12:
            x_max -= profile(np.array([x_max]), deriv=1)[0] / d2
    return float(x_min % L), float(x_max % L)


# ---------------------------------------------------------------------------
# canonical models


def trivial_model(L=2.0 * np.pi, N=512) -> CircleModel:
    return CircleModel(L=L, N=N, holonomy=np.eye(1))


def rotation_model(angle, L=2.0 * np.pi, N=512) -> CircleModel:
    c, s = np.cos(angle), np.sin(angle)
    return CircleModel(L=L, N=N, holonomy=np.array([[c, -s], [s, c]]))


def normal_form_model(N=512) -> CircleModel:
    """Trivial bundle at the circumference giving unit Hessians at both critical points."""
    return CircleModel(L=NORMAL_FORM_LENGTH, N=N, holonomy=np.eye(1))


# ---------------------------------------------------------------------------
# interchange format


def model_to_dict(model: CircleModel) -> dict:
    f: dict = {"kind": model.f_kind}
    if model.f_kind == "samples":
        f["values"] = model.f_samples.tolist()
    return {
        "L": model.L,
        "N": model.N,
        "f": f,
        "bundle": {
            "rank": model.rank,
            "holonomy": model.holonomy.tolist(),
            "fiber_metric": model.fiber_metric.tolist(),
        },
    }


def model_from_dict(data: dict) -> CircleModel:
    try:
        f = data["f"]
        bundle = data["bundle"]
        return CircleModel(
            L=data["L"],
            N=data["N"],
            holonomy=bundle["holonomy"],
            fiber_metric=bundle.get("fiber_metric"),
            f_kind=f.get("kind", "one-minus-cos"),
            f_samples=f.get("values"),
        )
    except KeyError as exc:
        raise InputError(f"circle model missing field {exc}") from exc


def load_model(path) -> CircleModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def save_model(model: CircleModel, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
