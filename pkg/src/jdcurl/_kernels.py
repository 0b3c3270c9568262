"""Fused numba kernels for the interior loss and its u-gradient.

Same arithmetic as ``loss.LossEvaluator``'s numpy formulation, one pass over
the interior nodes.  Sums are Kahan-compensated.
"""
import numba as nb
import numpy as np


@nb.njit(cache=True)
def loss_2d(u, ih0, ih1, offset, target):
    n0, n1 = u.shape[1], u.shape[2]
    s1 = 0.0
    c1 = 0.0
    s2 = 0.0
    c2 = 0.0
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            a = (u[0, i + 1, j] - u[0, i - 1, j]) * ih0
            b = (u[0, i, j + 1] - u[0, i, j - 1]) * ih1
            c = (u[1, i + 1, j] - u[1, i - 1, j]) * ih0
            d = (u[1, i, j + 1] - u[1, i, j - 1]) * ih1
            P = a + d + (a * d - b * c) + offset[i - 1, j - 1]
            Q = c - b - target[i - 1, j - 1]
            y = P * P - c1
            t = s1 + y
            c1 = (t - s1) - y
            s1 = t
            y = Q * Q - c2
            t = s2 + y
            c2 = (t - s2) - y
            s2 = t
    return s1, s2


@nb.njit(cache=True)
def grad_2d(u, ih0, ih1, offset, target, wbuf, out):
    """dL/du at interior nodes into ``out`` (2, n0-2, n1-2); ``wbuf`` is scratch."""
    n0, n1 = u.shape[1], u.shape[2]
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            a = (u[0, i + 1, j] - u[0, i - 1, j]) * ih0
            b = (u[0, i, j + 1] - u[0, i, j - 1]) * ih1
            c = (u[1, i + 1, j] - u[1, i - 1, j]) * ih0
            d = (u[1, i, j + 1] - u[1, i, j - 1]) * ih1
            P = a + d + (a * d - b * c) + offset[i - 1, j - 1]
            Q = c - b - target[i - 1, j - 1]
            wbuf[0, 0, i, j] = P * (1.0 + d)
            wbuf[0, 1, i, j] = -P * c - Q
            wbuf[1, 0, i, j] = -P * b + Q
            wbuf[1, 1, i, j] = P * (1.0 + a)
    for k in range(2):
        for i in range(1, n0 - 1):
            for j in range(1, n1 - 1):
                out[k, i - 1, j - 1] = (wbuf[k, 0, i - 1, j] - wbuf[k, 0, i + 1, j]) * ih0 + (
                    wbuf[k, 1, i, j - 1] - wbuf[k, 1, i, j + 1]
                ) * ih1


@nb.njit(cache=True)
def _jac3(u, i, j, k, ih, J):
    for c in range(3):
        J[c, 0] = (u[c, i + 1, j, k] - u[c, i - 1, j, k]) * ih[0]
        J[c, 1] = (u[c, i, j + 1, k] - u[c, i, j - 1, k]) * ih[1]
        J[c, 2] = (u[c, i, j, k + 1] - u[c, i, j, k - 1]) * ih[2]


@nb.njit(cache=True)
def _pq3(J, off, t0, t1, t2):
    det = (
        J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
        - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
        + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0])
    )
    tail = (
        J[0, 0] * J[1, 1]
        + J[0, 0] * J[2, 2]
        + J[1, 1] * J[2, 2]
        - J[0, 1] * J[1, 0]
        - J[0, 2] * J[2, 0]
        - J[1, 2] * J[2, 1]
    )
    P = J[0, 0] + J[1, 1] + J[2, 2] + det + tail + off
    q0 = J[2, 1] - J[1, 2] - t0
    q1 = J[0, 2] - J[2, 0] - t1
    q2 = J[1, 0] - J[0, 1] - t2
    return P, q0, q1, q2


@nb.njit(cache=True)
def loss_3d(u, ih, offset, target):
    n0, n1, n2 = u.shape[1], u.shape[2], u.shape[3]
    J = np.empty((3, 3))
    s1 = 0.0
    c1 = 0.0
    s2 = 0.0
    c2 = 0.0
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            for k in range(1, n2 - 1):
                _jac3(u, i, j, k, ih, J)
                P, q0, q1, q2 = _pq3(
                    J,
                    offset[i - 1, j - 1, k - 1],
                    target[0, i - 1, j - 1, k - 1],
                    target[1, i - 1, j - 1, k - 1],
                    target[2, i - 1, j - 1, k - 1],
                )
                y = P * P - c1
                t = s1 + y
                c1 = (t - s1) - y
                s1 = t
                y = q0 * q0 + q1 * q1 + q2 * q2 - c2
                t = s2 + y
                c2 = (t - s2) - y
                s2 = t
    return s1, s2


@nb.njit(cache=True)
def grad_3d(u, ih, offset, target, wbuf, out):
    n0, n1, n2 = u.shape[1], u.shape[2], u.shape[3]
    M = np.empty((3, 3))
    J = np.empty((3, 3))
    for i in range(1, n0 - 1):
        for j in range(1, n1 - 1):
            for k in range(1, n2 - 1):
                _jac3(u, i, j, k, ih, J)
                P, q0, q1, q2 = _pq3(
                    J,
                    offset[i - 1, j - 1, k - 1],
                    target[0, i - 1, j - 1, k - 1],
                    target[1, i - 1, j - 1, k - 1],
                    target[2, i - 1, j - 1, k - 1],
                )
                # identity + cofactor + Tail derivative
                for r in range(3):
                    r1 = (r + 1) % 3
                    r2 = (r + 2) % 3
                    for s in range(3):
                        s1 = (s + 1) % 3
                        s2 = (s + 2) % 3
                        M[r, s] = J[r1, s1] * J[r2, s2] - J[r1, s2] * J[r2, s1]
                M[0, 0] += 1.0 + J[1, 1] + J[2, 2]
                M[1, 1] += 1.0 + J[0, 0] + J[2, 2]
                M[2, 2] += 1.0 + J[0, 0] + J[1, 1]
                M[0, 1] -= J[1, 0]
                M[0, 2] -= J[2, 0]
                M[1, 0] -= J[0, 1]
                M[1, 2] -= J[2, 1]
                M[2, 0] -= J[0, 2]
                M[2, 1] -= J[1, 2]
                for r in range(3):
                    for s in range(3):
                        wbuf[r, s, i, j, k] = P * M[r, s]
                wbuf[0, 1, i, j, k] -= q2
                wbuf[0, 2, i, j, k] += q1
                wbuf[1, 0, i, j, k] += q2
                wbuf[1, 2, i, j, k] -= q0
                wbuf[2, 0, i, j, k] -= q1
                wbuf[2, 1, i, j, k] += q0
    for r in range(3):
        for i in range(1, n0 - 1):
            for j in range(1, n1 - 1):
                for k in range(1, n2 - 1):
                    out[r, i - 1, j - 1, k - 1] = (
                        (wbuf[r, 0, i - 1, j, k] - wbuf[r, 0, i + 1, j, k]) * ih[0]
                        + (wbuf[r, 1, i, j - 1, k] - wbuf[r, 1, i, j + 1, k]) * ih[1]
                        + (wbuf[r, 2, i, j, k - 1] - wbuf[r, 2, i, j, k + 1]) * ih[2]
                    )
