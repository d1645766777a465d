"""Comparison map to the Morse complex and determinant-line metrics.

The map evaluates 0-forms at index-0 critical points and integrates 1-forms
over the unstable arc of the index-1 point (the circle minus the minimum),
with holonomy bookkeeping.  It realizes, at the discrete level, the canonical
identification between the small-eigenvalue subcomplex and the Morse
complex, and it carries reference cohomology classes from the spectral side
to the combinatorial side so that determinant-line metrics are measured on
the same element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cochain
from .circle import CircleModel
from .errors import DegenerateMapError, DegenerateReferenceError, InputError
from .morse import MorseData, build_thom_smale
from .witten import WittenOperators, SpectralSplit, discretize

CONDITION_LIMIT = 1e8


def _check_matching(model: CircleModel, morse: MorseData):
    mins = morse.points_by_index(0)
    maxs = morse.points_by_index(1)
    if len(mins) != 1 or len(maxs) != 1 or morse.top_degree != 1:
        raise InputError("circle comparison needs exactly one minimum and one maximum")
    if morse.rank != model.rank:
        raise InputError("bundle ranks of model and Morse data differ")
    f_min = float(model.f(np.array([model.x_min]))[0])
    f_max = float(model.f(np.array([model.x_max]))[0])
    if abs(mins[0].f_value - f_min) > 1e-8 or abs(maxs[0].f_value - f_max) > 1e-8:
        raise InputError("Morse data critical values do not match the model profile")


@dataclass(frozen=True, eq=False, repr=False)
class IntegrationMap:
    """Linear maps from grid cochains to the Morse complex, one per degree."""

    model: CircleModel
    morse: MorseData
    rows0: np.ndarray  # (r, r*N): evaluation at the minimum
    rows1: np.ndarray  # (r, r*N): integration over the unstable arc

    def apply(self, degree, cochain_values):
        rows = self.rows0 if degree == 0 else self.rows1
        return rows @ np.asarray(cochain_values, dtype=float)

    def apply_matrix(self, degree, columns):
        rows = self.rows0 if degree == 0 else self.rows1
        return rows @ np.asarray(columns, dtype=float)


def unstable_integration_map(ops: WittenOperators, split: SpectralSplit | None,
                             morse: MorseData) -> IntegrationMap:
    """Build the comparison map and check it is injective on the small subspace.

    Degree 0 evaluates at the minimum; degree 1 integrates midpoint values
    over one full period starting at the minimum, transporting values picked
    up past the seam back with the holonomy.  When a spectral split is given,
    the map restricted to the small eigenvectors must be well conditioned.
    """
    model = ops.model
    _check_matching(model, morse)
    n = ops.nodes.size
    r = model.rank

    rows0 = np.zeros((r, r * n))
    circ = np.abs((ops.nodes - model.x_min + model.L / 2) % model.L - model.L / 2)
    j_min = int(np.argmin(circ))
    rows0[:, j_min * r : (j_min + 1) * r] = np.eye(r)

    # unstable arc of the maximum: (x_min, x_min + L); midpoints at or past the
    # seam carry the holonomy back to the start of the arc
    rows1 = np.zeros((r, r * n))
    hol = model.holonomy
    for j in range(n):
        block = np.eye(r) if ops.mids[j] > model.x_min else hol
        rows1[:, j * r : (j + 1) * r] = ops.h * block
    result = IntegrationMap(model=model, morse=morse, rows0=rows0, rows1=rows1)

    if split is not None:
        for i in (0, 1):
            vecs = split.small_vectors[i]
            if vecs.shape[1] == 0:
                continue
            image = result.apply_matrix(i, vecs)
            svals = np.linalg.svd(image, compute_uv=False)
            if svals.size and (svals[-1] == 0 or svals[0] / svals[-1] > CONDITION_LIMIT):
                raise DegenerateMapError(
                    f"comparison map degenerate on degree {i} small subspace;"
                    " increase t or N"
                )
    return result


def standard_references(model: CircleModel, ops: WittenOperators):
    """Closed reference cochains spanning the flat bundle's cohomology.

    Degree 0: holonomy-invariant constant sections.  Degree 1: the constant
    1-form of unit total integral tensored with the same invariant vectors.
    """
    n = ops.nodes.size
    r = model.rank
    hol = model.orthogonal_holonomy()
    w, v = np.linalg.eig(hol)
    inv = v[:, np.abs(w - 1.0) < 1e-10].real
    if inv.size:
        inv, _ = np.linalg.qr(inv)
    b = inv.shape[1] if inv.size else 0
    refs0 = np.zeros((n * r, b))
    refs1 = np.zeros((n * r, b))
    for c in range(b):
        refs0[:, c] = np.tile(inv[:, c], n)
        refs1[:, c] = np.tile(inv[:, c], n) / model.L
    return [refs0, refs1]


def rs_metric_lognorm(model: CircleModel, t: float, reference_classes, n=None) -> float:
    """Log-norm of the reference element in the t-weighted L2 metric.

    Harmonic representatives are taken in the weighted inner product of the
    discretized complex; an acyclic bundle has an empty determinant line and
    returns 0.
    """
    ops = discretize(model, t, n=n)
    return rs_metric_lognorm_ops(ops, reference_classes).combined


def rs_metric_lognorm_ops(ops: WittenOperators, reference_classes) -> cochain.DetLineLogNorm:
    model = ops.model
    b = model.flat_betti()
    log_volumes = []
    for i in (0, 1):
        refs = np.asarray(reference_classes[i], dtype=float).reshape(ops.size, -1)
        if refs.shape[1] == 0:
            log_volumes.append(0.0)
            continue
        if refs.shape[1] > b[i]:
            raise InputError(
                f"degree {i}: {refs.shape[1]} references but cohomology has dim {b[i]}"
            )
        _, vectors = ops.eigenpairs(i, b[i])
        g = ops.gram_diag(i)
        # projection onto the kernel; eigenvectors are gram-orthonormal
        proj = vectors @ (vectors.T @ (g[:, None] * refs))
        m = proj.T @ (g[:, None] * proj)
        sign, logdet = np.linalg.slogdet(m)
        if sign <= 0:
            raise DegenerateReferenceError(
                f"degree {i}: reference classes not independent in cohomology"
            )
        log_volumes.append(0.5 * float(logdet))
    combined = float(log_volumes[0] - log_volumes[1])
    return cochain.DetLineLogNorm(
        reference_id="rs", log_volumes=tuple(log_volumes), combined=combined
    )


def milnor_metric_lognorm(morse: MorseData, mapped_references) -> float:
    """L2 log-norm of the mapped reference element on the Morse complex."""
    complex = build_thom_smale(morse)
    return cochain.det_line_lognorm(complex, mapped_references, "milnor").combined


def metric_ratio_log(model: CircleModel, morse: MorseData, t: float,
                     reference_classes=None, n=None) -> float:
    """log(|.|^Milnor / |.|^RS_t) for references shared through the comparison map."""
    ops = discretize(model, t, n=n)
    if reference_classes is None:
        reference_classes = standard_references(model, ops)
    rs = rs_metric_lognorm_ops(ops, reference_classes).combined
    imap = unstable_integration_map(ops, None, morse)
    mapped = [imap.apply_matrix(i, reference_classes[i]) for i in (0, 1)]
    milnor = milnor_metric_lognorm(morse, mapped)
    return milnor - rs
