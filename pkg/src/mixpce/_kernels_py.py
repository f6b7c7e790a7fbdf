"""Pure numpy implementations of the hot kernels (fallback backend)."""

import numpy as np

_ROW_CHUNK = 4096


def monomial_matrix(points, exponents):
    """Evaluate every monomial ``x**exponents[j]`` at every row of ``points``.

    Parameters
    ----------
    points : (m, d) float64 array
    exponents : (n, d) int64 array

    Returns
    -------
    (m, n) float64 array
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    exponents = np.ascontiguousarray(exponents, dtype=np.int64)
    m, d = points.shape
    n = exponents.shape[0]
    out = np.empty((m, n))
    if n == 0 or m == 0:
        return out
    pmax = int(exponents.max()) if exponents.size else 0
    active = [k for k in range(d) if exponents[:, k].any()]
    for start in range(0, m, _ROW_CHUNK):
        x = points[start:start + _ROW_CHUNK]
        powers = np.empty((x.shape[0], d, pmax + 1))
        powers[:, :, 0] = 1.0
        for k in range(1, pmax + 1):
            powers[:, :, k] = powers[:, :, k - 1] * x
        block = np.ones((x.shape[0], n))
        for k in active:
            block *= powers[:, k, exponents[:, k]]
        out[start:start + x.shape[0]] = block
    return out


def pair_expectation(head_l, cores_l, head_r, cores_r, gmom):
    """``E[T_l(eta) * T_r(eta)]`` for two polynomial-core tensor trains.

    Each core is a ``(deg + 1, r_prev, r_next)`` array of coefficient
    matrices in one standard-normal variable. The Kronecker product of the
    two trains is never formed: the running ``r_l x r_r`` contraction matrix
    absorbs one dimension at a time, weighting coefficient pairs ``(a, b)``
    by ``E[eta**(a+b)] = gmom[a + b]``.
    """
    v = np.outer(head_l, head_r)
    for el, er in zip(cores_l, cores_r):
        # t[b] = v @ er[b]  -> (deg_r+1, rl_prev, rr_next)
        t = np.einsum("ij,bjk->bik", v, er)
        new = np.zeros((el.shape[2], er.shape[2]))
        for a in range(el.shape[0]):
            w = gmom[a:a + er.shape[0]]
            if not w.any():
                continue
            s = np.tensordot(w, t, axes=1)
            new += el[a].T @ s
        v = new
    return float(v[0, 0])
