"""Discretized Witten-deformed de Rham complex on the circle.

Zero-forms live on grid nodes, one-forms on midpoints (staggered grid); the
coboundary is the 4th-order staggered difference with the holonomy applied
across the seam, and the inner products are trapezoid weights times the
deformation ``exp(-2 t f)``.  The Laplacians are assembled through the
gram-adjoint, so they are self-adjoint in the weighted inner products and
positive semidefinite by construction.  All conditioning-sensitive work
happens in the Cholesky (here: diagonal, hence exact) orthonormal frame.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh

from .circle import CircleModel
from .cochain import GradedComplex
from .errors import InputError, ResolutionError

# Dynamic-range ceiling on the deformation weight exp(2 t range(f)).  The
# default admits t up to ~40 for a unit-range profile in double precision;
# beyond that the raw weighted grams are no longer trustworthy end to end.
DEFAULT_PRECISION_GUARD = 1e35
GUARD_ENV = "TORSIONLAB_PRECISION_GUARD"

# Eigenvalue cutoff for the small/large split, fixed by the subcomplex
# definition; values within 1% are flagged, never reassigned.
SPLIT_CUTOFF = 1.0
SPLIT_FLAG_BAND = 0.01

_STENCIL = ((-1, 1.0 / 24.0), (0, -27.0 / 24.0), (1, 27.0 / 24.0), (2, -1.0 / 24.0))


def precision_guard() -> float:
    raw = os.environ.get(GUARD_ENV, "")
    if raw.strip():
        try:
            val = float(raw)
        except ValueError as exc:
            raise InputError(f"{GUARD_ENV} must be a number, got {raw!r}") from exc
        if val <= 1:
            raise InputError(f"{GUARD_ENV} must exceed 1")
        return val
    return DEFAULT_PRECISION_GUARD


def minimum_grid(model: CircleModel, t: float) -> int:
    """Smallest even grid resolving the localized eigenfunctions at deformation t."""
    curv = max(
        abs(model.fpp(np.array([model.x_min]))[0]),
        abs(model.fpp(np.array([model.x_max]))[0]),
        1e-6,
    )
    width = 1.0 / np.sqrt(max(t, 1.0) * curv)
    n = int(np.ceil(6.0 * model.L / width))
    return max(64, n + n % 2)


def staggered_difference(model: CircleModel, n=None) -> sp.csr_matrix:
    """4th-order node-to-midpoint difference with the holonomy seam twist."""
    nodes, mids, h = model.grid(n)
    n = nodes.size
    r = model.rank
    hol = model.holonomy
    hol_inv = np.linalg.inv(hol)
    rows, cols, vals = [], [], []
    eye = np.eye(r)
    for j in range(n):
        for off, c in _STENCIL:
            m = j + off
            if m >= n:
                block = c / h * hol
                m -= n
            elif m < 0:
                block = c / h * hol_inv
                m += n
            else:
                block = c / h * eye
            for a in range(r):
                for b in range(r):
                    if block[a, b]:
                        rows.append(j * r + a)
                        cols.append(m * r + b)
                        vals.append(block[a, b])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * r, n * r))


@dataclass(frozen=True, eq=False, repr=False)
class WittenOperators:
    """Discretized deformed complex at a fixed deformation parameter."""

    model: CircleModel
    t: float
    nodes: np.ndarray
    mids: np.ndarray
    h: float
    weight0: np.ndarray      # trapezoid * exp(-2tf) at nodes, per component
    weight1: np.ndarray      # same at midpoints
    d: sp.csr_matrix         # holonomy-twisted staggered difference

    def __repr__(self):
        return f"WittenOperators(t={self.t:.6g}, N={self.nodes.size}, rank={self.model.rank})"

    @property
    def size(self) -> int:
        return self.nodes.size * self.model.rank

    def gram_diag(self, i) -> np.ndarray:
        return self.weight0 if i == 0 else self.weight1

    def conjugated_factor(self) -> sp.csr_matrix:
        """B = W1^{1/2} d W0^{-1/2}; then H_0 = B^T B and H_1 = B B^T.

        The scaling is elementwise, and stencil neighbors are a grid step
        apart, so entries see only the local ratio exp(-t * O(h)) of the
        deformation weight: no dynamic-range loss at any admissible t.
        """
        s1 = np.sqrt(self.weight1)
        s0inv = 1.0 / np.sqrt(self.weight0)
        return sp.diags(s1) @ self.d @ sp.diags(s0inv)

    def laplacian_matrix(self, i) -> np.ndarray:
        """Dense Laplacian on degree ``i`` in the given (weighted) basis."""
        b = self.conjugated_factor()
        h = (b.T @ b) if i == 0 else (b @ b.T)
        s = np.sqrt(self.gram_diag(i))
        return (h.toarray() * s[None, :]) / s[:, None]

    def symmetric_laplacian(self, i) -> sp.csr_matrix:
        """Sparse symmetric PSD Laplacian in the orthonormal frame of degree ``i``."""
        b = self.conjugated_factor()
        return (b.T @ b).tocsr() if i == 0 else (b @ b.T).tocsr()

    def as_graded_complex(self) -> GradedComplex:
        """Dense graded-complex view for the exact linear-algebra engine."""
        return GradedComplex(
            dims=(self.size, self.size),
            grams=(np.diag(self.weight0), np.diag(self.weight1)),
            boundaries=(self.d.toarray(),),
        )

    def spectrum(self, i, k=None) -> np.ndarray:
        """Sorted Laplacian eigenvalues on degree ``i`` (``k`` smallest, or all)."""
        h = self.symmetric_laplacian(i)
        if k is None or k >= self.size - 1:
            return np.sort(eigh(h.toarray(), eigvals_only=True))
        w = eigsh(h, k=k, sigma=0, which="LM", return_eigenvectors=False)
        return np.sort(w)

    def eigenpairs(self, i, k) -> tuple:
        """(values, vectors) of the ``k`` smallest; vectors are columns in the
        weighted basis, orthonormal for the weighted gram."""
        h = self.symmetric_laplacian(i)
        if k >= self.size - 1:
            w, v = eigh(h.toarray())
            w, v = w[:k], v[:, :k]
        else:
            w, v = eigsh(h, k=k, sigma=0, which="LM")
            order = np.argsort(w)
            w, v = w[order], v[:, order]
        back = 1.0 / np.sqrt(self.gram_diag(i))
        return w, v * back[:, None]

    def noise_floor(self, i) -> float:
        """Absolute eigenvalue scale below which the grid eigensolve is noise."""
        top = 4.0 * (27.0 / (12.0 * self.h)) ** 2  # stencil-norm bound on ||H||
        tpart = (self.t * np.max(np.abs(self.model.fp(self.nodes)))) ** 2
        return 64.0 * np.finfo(float).eps * (top + tpart)


def discretize(model: CircleModel, t: float, n=None) -> WittenOperators:
    """Assemble the deformed operators at deformation parameter ``t``.

    Refuses when the deformation weight's dynamic range exceeds the precision
    guard, or when the grid cannot resolve the localized low modes (with a
    suggested grid size in that case).
    """
    if t < 0:
        raise InputError("deformation parameter must be nonnegative")
    model.require_parallel()
    guard = precision_guard()
    dyn_range = 2.0 * t * model.f_range
    if dyn_range > np.log(guard):
        raise ResolutionError(
            f"deformation weight dynamic range exp({dyn_range:.1f}) exceeds the precision"
            f" guard {guard:.3g}; reduce t below {np.log(guard) / (2 * model.f_range):.2f}"
            f" or raise {GUARD_ENV}",
            suggested_n=None,
        )
    nodes, mids, h = model.grid(n)
    n_eff = nodes.size
    n_min = minimum_grid(model, t)
    if n_eff < n_min:
        raise ResolutionError(
            f"grid size {n_eff} cannot resolve deformation t={t:g}; use N >= {n_min}",
            suggested_n=n_min,
        )
    r = model.rank
    w0 = np.repeat(h * np.exp(-2.0 * t * model.f(nodes)), r)
    w1 = np.repeat(h * np.exp(-2.0 * t * model.f(mids)), r)
    d = staggered_difference(model, n)
    return WittenOperators(
        model=model, t=float(t), nodes=nodes, mids=mids, h=h,
        weight0=w0, weight1=w1, d=d,
    )


@dataclass(frozen=True, eq=False, repr=False)
class SpectralSplit:
    """Eigenvalues at most the cutoff, with eigenvectors, per degree."""

    t: float
    small_values: tuple          # per degree: ascending array of eigenvalues <= cutoff
    small_vectors: tuple         # per degree: columns in the weighted basis
    counts: tuple                # m_i = len(small_values[i])
    large_counts: tuple
    boundary_flags: tuple        # per degree: True when an eigenvalue sits within
                                 # SPLIT_FLAG_BAND of the cutoff
    refined: tuple               # per degree: number of eigenvalues replaced by
                                 # discriminant refinement below the grid noise floor


def spectral_split(ops: WittenOperators, refine=True) -> SpectralSplit:
    """Split the spectrum at the fixed cutoff 1.

    Eigenvalues below the grid eigensolve's noise floor are refined through
    the Floquet discriminant (they are exponentially small tunneling levels
    that dense linear algebra cannot see); kernel directions are pinned to 0
    exactly using the flat bundle's Betti numbers.
    """
    from .zeta import refine_small_eigenvalues  # deferred: zeta imports witten

    values, vectors, counts, larges, flags, refined = [], [], [], [], [], []
    for i in (0, 1):
        k = min(ops.size - 2, max(8, 2 * ops.model.rank + 4))
        w, v = ops.eigenpairs(i, k)
        while w[-1] <= SPLIT_CUTOFF * (1 + SPLIT_FLAG_BAND) and k < ops.size - 2:
            k = min(2 * k, ops.size - 2)
            w, v = ops.eigenpairs(i, k)
        floor = ops.noise_floor(i)
        nrefined = 0
        if refine and np.any(w < floor):
            small_idx = np.where(w < floor)[0]
            w = w.copy()
            w[small_idx] = refine_small_eigenvalues(ops, i, len(small_idx))
            nrefined = len(small_idx)
        inside = w <= SPLIT_CUTOFF
        values.append(w[inside])
        vectors.append(v[:, inside])
        counts.append(int(np.sum(inside)))
        larges.append(ops.size - int(np.sum(inside)))
        flags.append(bool(np.any(np.abs(w - SPLIT_CUTOFF) <= SPLIT_FLAG_BAND * SPLIT_CUTOFF)))
        refined.append(nrefined)
    return SpectralSplit(
        t=ops.t,
        small_values=tuple(values),
        small_vectors=tuple(vectors),
        counts=tuple(counts),
        large_counts=tuple(larges),
        boundary_flags=tuple(flags),
        refined=tuple(refined),
    )


def smallest_positive_eigenvalue(ops: WittenOperators, degree=None) -> float:
    """Smallest positive Laplacian eigenvalue over the requested degrees.

    Kernel dimensions come from the flat bundle's Betti numbers; values below
    the grid noise floor are refined through the discriminant.
    """
    from .zeta import refine_small_eigenvalues

    degrees = (0, 1) if degree is None else (degree,)
    best = np.inf
    kdim = ops.model.flat_betti()[0]
    for i in degrees:
        k = min(ops.size - 2, kdim + 4)
        w = ops.spectrum(i, k=k)
        floor = ops.noise_floor(i)
        candidates = w[kdim:]
        if candidates.size and candidates[0] < floor:
            n_small = int(np.sum(candidates < floor))
            refined = refine_small_eigenvalues(ops, i, kdim + n_small)
            candidates = np.concatenate([refined[kdim:], candidates[n_small:]])
        positives = candidates[candidates > 0]
        if positives.size:
            best = min(best, float(positives[0]))
    return best
