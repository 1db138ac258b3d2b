"""Pure NumPy implementations of the segment-detrending kernels.

Used when the compiled extension is unavailable (or forced via
``QMST_KERNEL=python``).  Same contracts as ``_core``; results agree to
floating-point reduction-order differences (~1e-13 relative).
"""

import numpy as np


def segment_residuals(profiles, design, proj):
    """Polynomial-detrended residuals of every segment of every profile.

    Parameters
    ----------
    profiles : (B, T) float64
        One profile per row.
    design : (s, p) float64
        Polynomial design matrix on the in-segment abscissa.
    proj : (p, s) float64
        Least-squares projector (pseudo-inverse of ``design``).

    Returns
    -------
    (B, 2*M, s) array, M = T // s.  Rows 0..M-1 are the segments counted
    from the start, rows M..2M-1 the segments counted from the end (row
    M+j starts at T-(j+1)*s).
    """
    B, T = profiles.shape
    s = design.shape[0]
    M = T // s
    fwd = profiles[:, : M * s].reshape(B, M, s)
    bwd = profiles[:, T - M * s :].reshape(B, M, s)[:, ::-1, :]
    segs = np.concatenate([fwd, bwd], axis=1)
    coef = segs @ proj.T
    return segs - coef @ design.T


def pair_f2(rx, ry):
    """Per-segment detrended covariances of two residual stacks.

    ``rx``, ``ry`` are (2M, s) arrays from :func:`segment_residuals`;
    returns the (2M,) signed covariance sequence (product mean over the
    in-segment index).
    """
    return np.einsum("vk,vk->v", rx, ry) / rx.shape[1]


def panel_sign_power_means(resid, q_values):
    """Sign-preserving q/2-power averages of all pairwise segment covariances.

    Parameters
    ----------
    resid : (N, 2M, s) float64
        Detrended segment residuals of N series.
    q_values : (nq,) float64, all > 0.

    Returns
    -------
    (nq, N, N) array with entry [qi, i, j] equal to the average over
    segments of sign(f2_ij) * |f2_ij| ** (q/2), where f2_ij is the
    segment covariance of series i and j.  Exactly symmetric; the
    diagonal holds the univariate (non-negative) averages.
    """
    N, n_seg, s = resid.shape
    q_values = np.asarray(q_values, dtype=np.float64)
    out = np.zeros((len(q_values), N, N))
    # block over segments to bound the (b, N, N) intermediate
    block = max(1, int(4_000_000 // max(1, N * N)))
    for v0 in range(0, n_seg, block):
        r = resid[:, v0 : v0 + block].transpose(1, 0, 2)  # (b, N, s)
        f2 = r @ r.transpose(0, 2, 1)
        f2 /= s
        a = np.abs(f2)
        sg = np.sign(f2)
        for qi, q in enumerate(q_values):
            e = 0.5 * q
            if e == 1.0:
                p = a
            elif e == 2.0:
                p = a * a
            else:
                p = a**e
            out[qi] += (sg * p).sum(axis=0)
    out /= n_seg
    # mirror the upper triangle so symmetry is exact, not just BLAS-accidental
    iu = np.triu_indices(N, 1)
    for qi in range(len(q_values)):
        out[qi][(iu[1], iu[0])] = out[qi][iu]
    return out
