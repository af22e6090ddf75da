"""Pure numpy versions of the pair-quadrature kernels."""
import numpy as np


def pair_apply(rows, w, pidx, pcoef, qidx, qcoef, f, g, n):
    """out[i] = sum over pairs p of row i of w_p (P_p f Q_p g + P_p g Q_p f)."""
    pf = np.einsum("pk,pk->p", pcoef, f[pidx])
    qf = np.einsum("pk,pk->p", qcoef, f[qidx])
    if g is f:
        vals = 2.0 * w * pf * qf
    else:
        pg = np.einsum("pk,pk->p", pcoef, g[pidx])
        qg = np.einsum("pk,pk->p", qcoef, g[qidx])
        vals = w * (pf * qg + pg * qf)
    return np.bincount(rows, vals, minlength=n)


def pair_jacobian(rows, w, pidx, pcoef, qidx, qcoef, g, n):
    """Matrix J with J @ h == pair_apply(..., g, h, n)."""
    pg = np.einsum("pk,pk->p", pcoef, g[pidx])
    qg = np.einsum("pk,pk->p", qcoef, g[qidx])
    J = np.zeros(n * n)
    r = rows[:, None] * n
    np.add.at(J, (r + qidx).ravel(), ((w * pg)[:, None] * qcoef).ravel())
    np.add.at(J, (r + pidx).ravel(), ((w * qg)[:, None] * pcoef).ravel())
    return J.reshape(n, n)
