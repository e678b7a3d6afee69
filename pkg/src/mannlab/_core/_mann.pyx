# cython: boundscheck=False, wraparound=False, initializedcheck=False, language_level=3
"""Compiled Mann-recursion kernel.

The float stream produced here is the reference: `_mann_py.mann_run_kernel`
mirrors every arithmetic expression in the same order so both backends
are bit-identical (the build disables FMA contraction for this reason).
Any change to the update or norm accumulation below must be applied to
the mirror as well.

Operator codes: 0 identity, 1 constant vector, 2 negation,
3 diagonal (op_vec holds the eigenvalues), 4 affine x -> A x + b
(op_mat = A, op_vec = b), 5 elementwise clipped quadratic with strength
op_a and window op_b.

Status codes: 0 converged, 1 max_iter reached, 2 divergence guard.
"""

from libc.math cimport sqrt, pow, fabs, NAN


cdef inline double _apply_op(int op_code, double[::1] op_vec, double[:, ::1] op_mat,
                             double op_a, double op_b, double[::1] x, int i) nogil:
    cdef double xi = x[i]
    cdef double acc, a, s
    cdef Py_ssize_t j
    if op_code == 0:
        return xi
    elif op_code == 1:
        return op_vec[i]
    elif op_code == 2:
        return -xi
    elif op_code == 3:
        return op_vec[i] * xi
    elif op_code == 4:
        acc = op_vec[i]
        for j in range(x.shape[0]):
            acc += op_mat[i, j] * x[j]
        return acc
    else:
        a = fabs(xi)
        if a <= op_b:
            return xi - op_a * xi * a
        s = 2.0 * a - op_b
        return xi - op_a * op_b * s * (1.0 if xi > 0.0 else -1.0)


def mann_run_kernel(double[:, ::1] X, double[::1] R, double[::1] D,
                    double[::1] x0, double[::1] u,
                    double[::1] alphas, double[::1] betas, double[::1] gammas,
                    int op_code, double[::1] op_vec, double[:, ::1] op_mat,
                    double op_a, double op_b,
                    double p_exp, bint has_z, double[::1] z, bint use_dist_stop,
                    double rtol, double dtol, double guard_radius, int max_iter):
    cdef Py_ssize_t dim = x0.shape[0]
    cdef Py_ssize_t i, k
    cdef double[::1] x = X[0]      # scratch row reused; X rows hold states
    cdef double ti, di, sres, snorm, sdist, res, nrm, dst
    cdef double al, be, ga, cc, yi
    cdef double inv_p = 0.0
    cdef int steps = 0, status = 1
    cdef double[::1] t_buf

    import numpy as _np
    t_arr = _np.empty(dim, dtype=_np.float64)
    t_buf = t_arr

    if p_exp > 0.0:
        inv_p = 1.0 / p_exp

    for i in range(dim):
        X[0, i] = x0[i]

    for k in range(max_iter + 1):
        x = X[k]
        sres = 0.0
        snorm = 0.0
        for i in range(dim):
            ti = _apply_op(op_code, op_vec, op_mat, op_a, op_b, x, i)
            t_buf[i] = ti
            di = x[i] - ti
            if p_exp > 0.0:
                sres += pow(fabs(di), p_exp)
                snorm += pow(fabs(x[i]), p_exp)
            else:
                sres += di * di
                snorm += x[i] * x[i]
        if p_exp > 0.0:
            res = pow(sres, inv_p)
            nrm = pow(snorm, inv_p)
        else:
            res = sqrt(sres)
            nrm = sqrt(snorm)
        R[k] = res
        if has_z:
            sdist = 0.0
            for i in range(dim):
                di = x[i] - z[i]
                if p_exp > 0.0:
                    sdist += pow(fabs(di), p_exp)
                else:
                    sdist += di * di
            dst = pow(sdist, inv_p) if p_exp > 0.0 else sqrt(sdist)
            D[k] = dst
        else:
            D[k] = NAN
        if res <= rtol and (not has_z or not use_dist_stop or D[k] <= dtol):
            steps = <int>k
            status = 0
            break
        if nrm > guard_radius:
            steps = <int>k
            status = 2
            break
        if k == max_iter:
            steps = max_iter
            status = 1
            break
        al = alphas[k]
        be = betas[k]
        ga = gammas[k]
        cc = 1.0 - be - ga
        for i in range(dim):
            yi = (1.0 - al) * x[i] + al * t_buf[i]
            X[k + 1, i] = be * u[i] + ga * x[i] + cc * yi

    return steps, status
