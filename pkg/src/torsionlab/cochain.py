"""Finite graded cochain complexes with Euclidean structure.

A :class:`GradedComplex` carries, per degree, a dimension, a symmetric
positive-definite Gram matrix (the inner product in the given basis) and a
coboundary map to the next degree.  Everything downstream (Laplacians, Betti
numbers, torsion, determinant-line metrics) is exact finite-dimensional
linear algebra on this structure.

Conventions
-----------
* The coboundary raises degree: ``boundary[i]`` maps degree ``i`` to ``i+1``.
* Adjoints are taken with respect to the Gram matrices,
  ``d* = G_i^{-1} d^T G_{i+1}``.
* Eigenproblems are solved in the Cholesky-orthonormalized frame, where the
  Laplacian is assembled as ``B^T B + C C^T`` and is symmetric
  positive-semidefinite by construction.
* Torsion and volumes are accumulated in the log domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cholesky, eigh, solve_triangular

from .errors import (
    AmbiguousSpectrumError,
    DegenerateReferenceError,
    DegreeError,
    InvalidComplexError,
)

# Kernel cutoff, relative to the largest eigenvalue in the degree.
KERNEL_CUTOFF_REL = 1e-9
# Eigenvalues within [cut/10, 10*cut] are flagged as ambiguous, never reassigned.
AMBIGUITY_BAND = (0.1, 10.0)
# d*d tolerance for numeric inputs, relative to the product of operator norms.
BOUNDARY_TOL_REL = 1e-12
# Hadamard ratio below which a projected reference Gram counts as degenerate.
DEGENERATE_GRAM_RATIO = 1e-10


def _as_matrix(a, shape, name):
    m = np.asarray(a, dtype=float)
    if m.shape != shape:
        raise InvalidComplexError(f"{name}: expected shape {shape}, got {m.shape}")
    return m


@dataclass(frozen=True, eq=False, repr=False)
class GradedComplex:
    """A finite cochain complex with degree-wise inner products.

    Parameters
    ----------
    dims : sequence of int
        Dimension of each degree, ``len(dims) == n + 1``.
    grams : sequence of ndarray
        SPD Gram matrix per degree (``dims[i] x dims[i]``).
    boundaries : sequence of ndarray
        ``boundaries[i]`` is the coboundary from degree ``i`` to ``i+1``
        with shape ``(dims[i+1], dims[i])``; length ``n``.
    """

    dims: tuple
    grams: tuple
    boundaries: tuple
    _chol: tuple = field(init=False, repr=False, compare=False, default=())

    def __init__(self, dims, grams, boundaries, validate=True):
        dims = tuple(int(d) for d in dims)
        if not dims:
            raise InvalidComplexError("complex needs at least one degree")
        if any(d < 0 for d in dims):
            raise InvalidComplexError("negative dimension")
        n = len(dims) - 1
        grams = tuple(
            _as_matrix(g, (dims[i], dims[i]), f"gram[{i}]") for i, g in enumerate(grams)
        )
        if len(grams) != n + 1:
            raise InvalidComplexError("need one gram per degree")
        boundaries = tuple(
            _as_matrix(b, (dims[i + 1], dims[i]), f"boundary[{i}]")
            for i, b in enumerate(boundaries)
        )
        if len(boundaries) != n:
            raise InvalidComplexError("need one boundary per adjacent pair of degrees")
        for a in grams + boundaries:
            a.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "grams", grams)
        object.__setattr__(self, "boundaries", boundaries)
        chol = []
        for i, g in enumerate(grams):
            if g.size and not np.allclose(g, g.T, rtol=1e-12, atol=1e-14 * _norm(g)):
                raise InvalidComplexError(f"gram[{i}] is not symmetric")
            try:
                c = cholesky(g, lower=True) if g.size else g.reshape(0, 0)
            except np.linalg.LinAlgError as exc:
                raise InvalidComplexError(f"gram[{i}] is not positive-definite") from exc
            except Exception as exc:  # scipy raises LinAlgError subclassing ValueError
                raise InvalidComplexError(f"gram[{i}] is not positive-definite") from exc
            c.setflags(write=False)
            chol.append(c)
        object.__setattr__(self, "_chol", tuple(chol))
        if validate:
            self._check_boundary_squares_to_zero()

    def __repr__(self):
        return f"GradedComplex(dims={self.dims})"

    @property
    def top_degree(self) -> int:
        return len(self.dims) - 1

    def _check_boundary_squares_to_zero(self):
        for i in range(self.top_degree - 1):
            a, b = self.boundaries[i + 1], self.boundaries[i]
            if not a.size or not b.size:
                continue
            resid = _norm(a @ b)
            tol = BOUNDARY_TOL_REL * max(_norm(a) * _norm(b), 1e-300)
            if resid > tol:
                raise InvalidComplexError(
                    f"boundary_{i + 1} o boundary_{i} != 0 (|dd| = {resid:.3e}, tol = {tol:.3e})"
                )

    def boundary(self, i) -> np.ndarray:
        """Coboundary out of degree ``i`` (a ``0 x dim_n`` map at the top)."""
        if not 0 <= i <= self.top_degree:
            raise DegreeError(f"degree {i} outside [0, {self.top_degree}]")
        if i == self.top_degree:
            return np.zeros((0, self.dims[i]))
        return self.boundaries[i]

    def orthonormal_boundary(self, i) -> np.ndarray:
        """The coboundary out of degree ``i`` between Cholesky-orthonormal frames."""
        b = self.boundary(i)
        if i == self.top_degree or not b.size:
            return b
        li, lj = self._chol[i], self._chol[i + 1]
        # B_hat = L_{i+1}^T  d  L_i^{-T}
        x = solve_triangular(li, b.T, lower=True).T if li.size else b
        return lj.T @ x if lj.size else x

    def from_orthonormal(self, i, vectors) -> np.ndarray:
        """Map coordinates in the orthonormal frame of degree ``i`` back to the given basis."""
        li = self._chol[i]
        if not li.size:
            return np.asarray(vectors, dtype=float)
        return solve_triangular(li, np.asarray(vectors, dtype=float), lower=True, trans="T")


@dataclass(frozen=True)
class GradingOperators:
    """The degree operator N and parity operator tau, as per-degree blocks."""

    dims: tuple

    @classmethod
    def for_complex(cls, complex: GradedComplex) -> "GradingOperators":
        return cls(dims=complex.dims)

    @property
    def number_blocks(self):
        return tuple(float(i) * np.eye(d) for i, d in enumerate(self.dims))

    @property
    def parity_blocks(self):
        return tuple(float((-1) ** i) * np.eye(d) for i, d in enumerate(self.dims))


@dataclass(frozen=True)
class SpectrumByDegree:
    """Sorted Laplacian eigenvalues per degree, with kernel bookkeeping."""

    eigenvalues: tuple          # tuple of 1-D arrays, sorted ascending
    kernel_dims: tuple          # ints
    cutoffs: tuple              # per-degree kernel cutoff actually used
    ambiguous: tuple            # per-degree bool: eigenvalue inside the ambiguity band


@dataclass(frozen=True)
class BettiNumbers(Sequence):
    """Kernel dimensions per degree; behaves like a tuple of ints.

    ``ambiguous[i]`` is True when some eigenvalue of the degree-``i``
    Laplacian fell inside the kernel-cutoff ambiguity band, in which case
    the count should not be trusted blindly.
    """

    numbers: tuple
    ambiguous: tuple

    def __getitem__(self, i):
        return self.numbers[i]

    def __len__(self):
        return len(self.numbers)

    def __eq__(self, other):
        if isinstance(other, BettiNumbers):
            return self.numbers == other.numbers
        return tuple(self.numbers) == tuple(other)

    def __hash__(self):
        return hash(self.numbers)


@dataclass(frozen=True)
class DetLineLogNorm:
    """A metric on the determinant line, as log-volumes of a reference element."""

    reference_id: str
    log_volumes: tuple
    combined: float


def laplacian(complex: GradedComplex, i: int) -> np.ndarray:
    """Hodge Laplacian on degree ``i`` in the complex's given basis.

    Self-adjoint with respect to ``gram_i`` (so ``gram_i @ laplacian`` is
    symmetric), positive semidefinite, and commutes with the coboundary.
    """
    if not 0 <= i <= complex.top_degree:
        raise DegreeError(f"degree {i} outside [0, {complex.top_degree}]")
    d = complex.dims[i]
    out = np.zeros((d, d))
    gi = complex.grams[i]
    if i < complex.top_degree:
        b = complex.boundaries[i]
        if b.size:
            # d* d  with  d* = G_i^{-1} d^T G_{i+1}
            out += np.linalg.solve(gi, b.T @ complex.grams[i + 1] @ b)
    if i > 0:
        b = complex.boundaries[i - 1]
        if b.size:
            out += b @ np.linalg.solve(complex.grams[i - 1], b.T) @ gi
    return out


def _orthonormal_laplacian(complex: GradedComplex, i: int) -> np.ndarray:
    """Symmetric PSD Laplacian in the Cholesky-orthonormal frame of degree ``i``."""
    d = complex.dims[i]
    out = np.zeros((d, d))
    if i < complex.top_degree:
        b = complex.orthonormal_boundary(i)
        if b.size:
            out += b.T @ b
    if i > 0:
        b = complex.orthonormal_boundary(i - 1)
        if b.size:
            out += b @ b.T
    return out


def spectrum_by_degree(complex: GradedComplex) -> SpectrumByDegree:
    """Eigenvalues of every Laplacian, with kernel cutoffs and ambiguity flags."""
    eigs, kdims, cuts, flags = [], [], [], []
    for i in range(complex.top_degree + 1):
        h = _orthonormal_laplacian(complex, i)
        w = np.sort(eigh(h, eigvals_only=True)) if h.size else np.zeros(0)
        top = float(w[-1]) if w.size else 0.0
        cut = KERNEL_CUTOFF_REL * top if top > 0 else np.inf
        lo, hi = AMBIGUITY_BAND[0] * cut, AMBIGUITY_BAND[1] * cut
        amb = bool(np.any((w >= lo) & (w <= hi))) if np.isfinite(cut) else False
        eigs.append(w)
        kdims.append(int(np.sum(w < cut)) if np.isfinite(cut) else int(w.size))
        cuts.append(cut)
        flags.append(amb)
    return SpectrumByDegree(tuple(eigs), tuple(kdims), tuple(cuts), tuple(flags))


def betti(complex: GradedComplex) -> BettiNumbers:
    """Kernel dimensions of the Laplacians (Betti numbers of the complex)."""
    spec = spectrum_by_degree(complex)
    return BettiNumbers(numbers=spec.kernel_dims, ambiguous=spec.ambiguous)


def euler_characteristics(betti_numbers) -> tuple:
    """(chi, chi') from a list of Betti numbers.

    chi = sum (-1)^i b_i, chi' = sum (-1)^i i b_i.
    """
    chi = sum((-1) ** i * int(b) for i, b in enumerate(betti_numbers))
    chi_prime = sum((-1) ** i * i * int(b) for i, b in enumerate(betti_numbers))
    return chi, chi_prime


def supertrace(blocks, grading: GradingOperators | None = None) -> float:
    """Supertrace of a degree-preserving operator given as per-degree blocks."""
    total = 0.0
    for i, a in enumerate(blocks):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidComplexError(f"block {i} is not square: operator must preserve degrees")
        if grading is not None and a.shape[0] != grading.dims[i]:
            raise InvalidComplexError(
                f"block {i} has size {a.shape[0]}, grading expects {grading.dims[i]}"
            )
        total += (-1) ** i * float(np.trace(a))
    return total


def torsion_log(complex: GradedComplex) -> float:
    """log of the torsion of the complex.

    Evaluates ``(1/2) sum_i (-1)^i i sum_{lambda > 0} log lambda`` over the
    positive Laplacian spectrum per degree; basis independent. Raises
    :class:`AmbiguousSpectrumError` when an eigenvalue falls in the kernel
    cutoff's ambiguity band.
    """
    spec = spectrum_by_degree(complex)
    if any(spec.ambiguous):
        bad = [i for i, a in enumerate(spec.ambiguous) if a]
        raise AmbiguousSpectrumError(
            f"eigenvalue(s) in the kernel-cutoff ambiguity band in degree(s) {bad}",
            spectrum=spec,
        )
    total = 0.0
    for i, (w, cut) in enumerate(zip(spec.eigenvalues, spec.cutoffs)):
        pos = w[w >= cut] if np.isfinite(cut) else w[:0]
        if pos.size:
            total += (-1) ** i * i * float(np.sum(np.log(pos)))
    return 0.5 * total


def harmonic_basis(complex: GradedComplex, i: int) -> np.ndarray:
    """Gram-orthonormal basis of ker(Laplacian_i), columns in the given basis."""
    h = _orthonormal_laplacian(complex, i)
    if not h.size:
        return np.zeros((0, 0))
    w, v = eigh(h)
    top = float(w[-1]) if w.size else 0.0
    cut = KERNEL_CUTOFF_REL * top if top > 0 else np.inf
    k = int(np.sum(w < cut)) if np.isfinite(cut) else w.size
    return complex.from_orthonormal(i, v[:, :k])


def det_line_lognorm(complex, reference_classes, reference_id="reference") -> DetLineLogNorm:
    """L2-style metric on the determinant line of cohomology.

    Projects each reference representative onto harmonic cochains, takes the
    Gram determinant of the projected set in ``gram_i``, and combines
    degree-wise log-volumes with alternating signs.

    Parameters
    ----------
    reference_classes : sequence
        Per degree, an array of shape ``(dim_i, b_i)`` of representative
        cochains (``None`` or an empty array where ``b_i = 0``).
    """
    log_volumes = []
    for i in range(complex.top_degree + 1):
        refs = reference_classes[i] if i < len(reference_classes) else None
        if refs is None:
            refs = np.zeros((complex.dims[i], 0))
        refs = np.asarray(refs, dtype=float).reshape(complex.dims[i], -1)
        if refs.shape[1] == 0:
            log_volumes.append(0.0)
            continue
        k = harmonic_basis(complex, i)
        if k.shape[1] < refs.shape[1]:
            raise DegenerateReferenceError(
                f"degree {i}: {refs.shape[1]} reference classes but kernel has dim {k.shape[1]}"
            )
        g = complex.grams[i]
        # orthogonal projection onto ker Delta: P = K K^T G (K is G-orthonormal)
        proj = k @ (k.T @ (g @ refs))
        m = proj.T @ (g @ proj)
        diag = np.diag(m)
        if np.any(diag <= 0):
            raise DegenerateReferenceError(f"degree {i}: reference projects to zero")
        sign, logdet = np.linalg.slogdet(m)
        if sign <= 0 or logdet - float(np.sum(np.log(diag))) < np.log(DEGENERATE_GRAM_RATIO):
            raise DegenerateReferenceError(
                f"degree {i}: reference classes not independent in cohomology"
            )
        log_volumes.append(0.5 * float(logdet))
    combined = float(sum((-1) ** i * lv for i, lv in enumerate(log_volumes)))
    return DetLineLogNorm(
        reference_id=reference_id, log_volumes=tuple(log_volumes), combined=combined
    )


def _coimage_lift(complex: GradedComplex, i: int) -> np.ndarray:
    """Columns spanning a complement of ker(boundary_i), via SVD of the coboundary."""
    b = complex.boundary(i)
    if not b.size:
        return np.zeros((complex.dims[i], 0))
    u, s, vt = np.linalg.svd(b)
    tol = max(b.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    r = int(np.sum(s > tol))
    return vt[:r].T


def milnor_log_norm(complex, reference_classes, reference_id="reference") -> DetLineLogNorm:
    """Metric on the determinant line through the full complex's determinant line.

    Implements the canonical identification of det(cohomology) with the
    alternating determinant line of the whole complex: per degree, assemble a
    basis ``[d Y_{i-1} | refs_i | Y_i]`` (coboundary images, reference
    representatives, coimage lifts) and combine Gram log-volumes with
    alternating signs.  Exactly invariant under the choice of lifts and of
    representatives within their classes, and computed without any Laplacian
    spectrum, so it is independent of :func:`torsion_log` and
    :func:`det_line_lognorm`.
    """
    lifts = [_coimage_lift(complex, i) for i in range(complex.top_degree + 1)]
    log_volumes = []
    for i in range(complex.top_degree + 1):
        cols = []
        if i > 0 and lifts[i - 1].shape[1]:
            cols.append(complex.boundaries[i - 1] @ lifts[i - 1])
        refs = reference_classes[i] if i < len(reference_classes) else None
        if refs is not None:
            refs = np.asarray(refs, dtype=float).reshape(complex.dims[i], -1)
            if refs.shape[1]:
                cols.append(refs)
        if lifts[i].shape[1]:
            cols.append(lifts[i])
        u = np.hstack(cols) if cols else np.zeros((complex.dims[i], 0))
        if u.shape[1] != complex.dims[i]:
            raise DegenerateReferenceError(
                f"degree {i}: assembled basis has {u.shape[1]} columns for dim {complex.dims[i]}"
                " (wrong number of reference classes?)"
            )
        if u.shape[1] == 0:
            log_volumes.append(0.0)
            continue
        m = u.T @ (complex.grams[i] @ u)
        sign, logdet = np.linalg.slogdet(m)
        if sign <= 0:
            raise DegenerateReferenceError(
                f"degree {i}: reference classes not independent in cohomology"
            )
        log_volumes.append(0.5 * float(logdet))
    combined = float(sum((-1) ** i * lv for i, lv in enumerate(log_volumes)))
    return DetLineLogNorm(
        reference_id=reference_id, log_volumes=tuple(log_volumes), combined=combined
    )


def metric_identity_gap(complex, reference_classes) -> float:
    """log||.|| - log|.| - log(torsion); vanishes for every complex.

    The three terms come from three independent computations (whole-complex
    determinant line, harmonic projection, Laplacian spectra), so a vanishing
    gap is a genuine cross-check rather than an algebraic tautology.
    """
    big = milnor_log_norm(complex, reference_classes).combined
    l2 = det_line_lognorm(complex, reference_classes).combined
    return big - l2 - torsion_log(complex)


def harmonic_references(complex: GradedComplex, rng=None, mix_coboundary=True):
    """Reference classes built from harmonic bases, optionally shifted by coboundaries.

    Coboundary shifts change representatives but not classes, which the
    determinant-line operations must not see.
    """
    refs = []
    for i in range(complex.top_degree + 1):
        k = harmonic_basis(complex, i)
        if k.shape[1] == 0:
            refs.append(np.zeros((complex.dims[i], 0)))
            continue
        r = k.copy()
        if rng is not None:
            mix = np.eye(k.shape[1]) + 0.2 * rng.standard_normal((k.shape[1], k.shape[1]))
            r = r @ mix
            if mix_coboundary and i > 0 and complex.dims[i - 1]:
                r = r + complex.boundaries[i - 1] @ rng.standard_normal(
                    (complex.dims[i - 1], k.shape[1])
                )
        refs.append(r)
    return refs


def _norm(a) -> float:
    return float(np.linalg.norm(a)) if np.asarray(a).size else 0.0


# ---------------------------------------------------------------------------
# interchange format


def complex_to_dict(complex: GradedComplex) -> dict:
    """Serialize to the JSON interchange structure (row-major full matrices)."""
    return {
        "n": complex.top_degree,
        "degrees": [
            {"dim": complex.dims[i], "gram": complex.grams[i].tolist()}
            for i in range(complex.top_degree + 1)
        ],
        "boundaries": [b.tolist() for b in complex.boundaries],
    }


def complex_from_dict(data: dict) -> GradedComplex:
    n = int(data["n"])
    degrees = data["degrees"]
    if len(degrees) != n + 1:
        raise InvalidComplexError(f"'degrees' must list {n + 1} entries")
    dims = [int(d["dim"]) for d in degrees]
    grams = [np.asarray(d["gram"], dtype=float).reshape(dims[i], dims[i])
             for i, d in enumerate(degrees)]
    boundaries = [
        np.asarray(b, dtype=float).reshape(dims[i + 1], dims[i])
        for i, b in enumerate(data["boundaries"])
    ]
    return GradedComplex(dims, grams, boundaries)


def load_complex(path) -> GradedComplex:
    with open(path) as fh:
        return complex_from_dict(json.load(fh))


def save_complex(complex: GradedComplex, path):
    with open(path, "w") as fh:
        json.dump(complex_to_dict(complex), fh, indent=2)
