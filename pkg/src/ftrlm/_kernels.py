"""Compiled single-epoch training loops.

These mirror ``optim.sgdm_step``, ``optim.adagrad_step`` and
``optim.ftrl_sgdm_step`` (unit weights) on sparse rows, with the same
operation order, so the two paths agree to roundoff. The harness uses
them by default; ``backend="python"`` switches back to the step functions.
"""

import math

import numba
import numpy as np

SGDM, SGDM_AVG, ADAGRAD, FTRL_M, ADA_FTRL_M = 0, 1, 2, 3, 4
HINGE, SQUARED_HINGE, ABS_DEVIATION = 0, 1, 2


@numba.njit(cache=True)
def run_epoch(algo, loss, indptr, indices, values, labels, offsets, order, scale,
              x, m, x1, gsq, avg, counters, c, beta, eps):
    """Process ``order`` in sequence, updating the state arrays in place.

    ``counters`` holds ``[t, sum_alpha]`` as floats. ``gsq`` accumulates
    per-coordinate squared gradients and doubles as the AdaGrad accumulator.
    """
    d = x.shape[0]
    for k in range(order.shape[0]):
        i = order[k]
        lo = indptr[i]
        hi = indptr[i + 1]
        s = 0.0
        for p in range(lo, hi):
            s += x[indices[p]] * values[p]

        y = labels[i]
        if loss == HINGE:
            coef = -y if 1.0 - y * s > 0.0 else 0.0
        elif loss == SQUARED_HINGE:
            z = 1.0 - y * s
            coef = -2.0 * z * y if z > 0.0 else 0.0
        else:
            r = s - offsets[i]
            coef = 1.0 if r > 0.0 else (-1.0 if r < 0.0 else 0.0)
        coef *= scale

        t = counters[0]
        for p in range(lo, hi):
            gj = coef * values[p]
            gsq[indices[p]] += gj * gj

        if algo == SGDM or algo == SGDM_AVG:
            eta = c / math.sqrt(t)
            for j in range(d):
                m[j] = beta * m[j]
            for p in range(lo, hi):
                j = indices[p]
                m[j] += (1.0 - beta) * (coef * values[p])
            for j in range(d):
                x[j] = x[j] - eta * m[j]
            if algo == SGDM_AVG:
                for j in range(d):
                    avg[j] = (t * avg[j] + x[j]) / (t + 1.0)
        elif algo == ADAGRAD:
            for p in range(lo, hi):
                j = indices[p]
                denom = math.sqrt(eps + gsq[j])
                if denom > 0.0:
                    x[j] = x[j] - c * ((coef * values[p]) / denom)
        else:
            s_prev = counters[1]
            s_cur = s_prev + 1.0
            s_next = s_cur + 1.0
            b = s_prev / s_cur
            for j in range(d):
                m[j] = b * m[j]
            for p in range(lo, hi):
                j = indices[p]
                m[j] += (1.0 - b) * (coef * values[p])
            shrink = s_cur / s_next
            pull = 1.0 / s_next
            ratio = 1.0 * s_cur / s_next
            if algo == FTRL_M:
                eta = ratio * (c / math.sqrt(t))
                for j in range(d):
                    x[j] = shrink * x[j] + pull * x1[j] - eta * m[j]
            else:
                for j in range(d):
                    eta_j = ratio * (c / math.sqrt(eps + gsq[j]))
                    x[j] = shrink * x[j] + pull * x1[j] - eta_j * m[j]
            counters[1] = s_cur
        counters[0] = t + 1.0
