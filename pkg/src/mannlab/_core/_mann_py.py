"""Pure-Python mirror of the compiled Mann-recursion kernel.

Every arithmetic expression appears in the same order as in `_mann.pyx`,
using plain Python floats and `math` functions that map to the same libm
calls, so the two backends produce bit-identical traces. Keep the two
files in lockstep.
"""

import math

_NAN = float("nan")


def _apply_op(op_code, op_vec, op_mat, op_a, op_b, x, i):
    xi = x[i]
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
        row = op_mat[i]
        for j in range(len(x)):
            acc += row[j] * x[j]
        return acc
    else:
        a = abs(xi)
        if a <= op_b:
            return xi - op_a * xi * a
        s = 2.0 * a - op_b
        return xi - op_a * op_b * s * (1.0 if xi > 0.0 else -1.0)


def mann_run_kernel(X, R, D, x0, u, alphas, betas, gammas,
                    op_code, op_vec, op_mat, op_a, op_b,
                    p_exp, has_z, z, use_dist_stop,
                    rtol, dtol, guard_radius, max_iter):
    dim = len(x0)
    u_l = [float(v) for v in u]
    z_l = [float(v) for v in z] if has_z else None
    vec_l = [float(v) for v in op_vec]
    mat_l = [[float(v) for v in row] for row in op_mat]
    al_l = [float(v) for v in alphas]
    be_l = [float(v) for v in betas]
    ga_l = [float(v) for v in gammas]
    inv_p = 1.0 / p_exp if p_exp > 0.0 else 0.0

    x = [float(v) for v in x0]
    t_buf = [0.0] * dim
    steps = 0
    status = 1

    for k in range(max_iter + 1):
        sres = 0.0
        snorm = 0.0
        for i in range(dim):
            ti = _apply_op(op_code, vec_l, mat_l, op_a, op_b, x, i)
            t_buf[i] = ti
            di = x[i] - ti
            if p_exp > 0.0:
                sres += math.pow(abs(di), p_exp)
                snorm += math.pow(abs(x[i]), p_exp)
            else:
                sres += di * di
                snorm += x[i] * x[i]
        if p_exp > 0.0:
            res = math.pow(sres, inv_p)
            nrm = math.pow(snorm, inv_p)
        else:
            res = math.sqrt(sres)
            nrm = math.sqrt(snorm)
        X[k, :] = x
        R[k] = res
        if has_z:
            sdist = 0.0
            for i in range(dim):
                di = x[i] - z_l[i]
                if p_exp > 0.0:
                    sdist += math.pow(abs(di), p_exp)
                else:
                    sdist += di * di
            dk = math.pow(sdist, inv_p) if p_exp > 0.0 else math.sqrt(sdist)
            D[k] = dk
        else:
            dk = _NAN
            D[k] = dk
        if res <= rtol and (not has_z or not use_dist_stop or dk <= dtol):
            steps = k
            status = 0
            break
        if nrm > guard_radius:
            steps = k
            status = 2
            break
        if k == max_iter:
            steps = max_iter
            status = 1
            break
        al = al_l[k]
        be = be_l[k]
        ga = ga_l[k]
        cc = 1.0 - be - ga
        for i in range(dim):
            yi = (1.0 - al) * x[i] + al * t_buf[i]
            x[i] = be * u_l[i] + ga * x[i] + cc * yi

    return steps, status
