# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the resampling stage."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def dual_cd(double[:, ::1] X, double[::1] y, double[::1] alpha, double[::1] w,
            double C, int max_iter, double tol):
    """Cyclic dual coordinate descent for the L1-loss linear SVM.

    ``alpha`` and ``w`` are updated in place. Returns (sweeps, violation).
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t i, j
    cdef int sweep = 0
    cdef double G, PG, qii, a_old, a_new, delta, viol = 0.0
    cdef double[::1] qdiag = np.empty(n)

    for i in range(n):
        qii = 0.0
        for j in range(d):
            qii += X[i, j] * X[i, j]
        qdiag[i] = qii

    while sweep < max_iter:
        sweep += 1
        viol = 0.0
        for i in range(n):
            G = 0.0
            for j in range(d):
                G += w[j] * X[i, j]
            G = y[i] * G - 1.0
            a_old = alpha[i]
            if a_old <= 0.0:
                PG = G if G < 0.0 else 0.0
            elif a_old >= C:
                PG = G if G > 0.0 else 0.0
            else:
                PG = G
            if fabs(PG) > viol:
                viol = fabs(PG)
            if fabs(PG) > 1e-12 and qdiag[i] > 0.0:
                a_new = a_old - G / qdiag[i]
                if a_new < 0.0:
                    a_new = 0.0
                elif a_new > C:
                    a_new = C
                delta = (a_new - a_old) * y[i]
                if delta != 0.0:
                    alpha[i] = a_new
                    for j in range(d):
                        w[j] += delta * X[i, j]
        if viol < tol:
            break
    return sweep, viol
