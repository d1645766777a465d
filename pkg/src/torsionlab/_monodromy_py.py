"""Pure-numpy monodromy propagation, the fallback for the compiled kernel.

Propagates the fundamental solution of the 2x2 first-order system

    Y' = [[0, 1], [-lam, p(x)]] Y

across one period with classic RK4, batched over a vector of (complex)
spectral parameters ``lam``.  Semantics match ``_monodromy`` exactly; only
speed differs.
"""

import numpy as np

COMPILED = False


def propagate_batch(p, lams, h):
    """Monodromy matrices of the batched system.

    Parameters
    ----------
    p : real array, shape (2*nsteps + 1,)
        First-order coefficient sampled at step endpoints and midpoints.
    lams : complex array, shape (B,)
        Spectral parameters.
    h : float
        Step size; the interval is ``nsteps * h``.

    Returns
    -------
    complex array, shape (B, 2, 2)
    """
    p = np.asarray(p, dtype=float)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    nsteps = (p.shape[0] - 1) // 2
    if p.shape[0] != 2 * nsteps + 1:
        raise ValueError("p must have 2*nsteps + 1 samples")
    b = lams.shape[0]
    y = np.zeros((b, 2, 2), dtype=complex)
    y[:, 0, 0] = 1.0
    y[:, 1, 1] = 1.0
    neg_lam = -lams[:, None]

    def apply(pj, m, out):
        out[:, 0, :] = m[:, 1, :]
        out[:, 1, :] = neg_lam * m[:, 0, :] + pj * m[:, 1, :]

    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    for s in range(nsteps):
        p0, pm, p1 = p[2 * s], p[2 * s + 1], p[2 * s + 2]
        apply(p0, y, k1)
        apply(pm, y + (0.5 * h) * k1, k2)
        apply(pm, y + (0.5 * h) * k2, k3)
        apply(p1, y + h * k3, k4)
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y
