"""Pure-Python fallbacks with the same signatures as the compiled kernels."""

from __future__ import annotations

import numpy as np


def dual_cd(X, y, alpha, w, C, max_iter, tol):
    X = np.asarray(X)
    n = X.shape[0]
    qdiag = np.einsum("ij,ij->i", X, X)
    rows = [X[i] for i in range(n)]
    ys = [float(v) for v in y]
    sweep = 0
    viol = 0.0
    while sweep < max_iter:
        sweep += 1
        viol = 0.0
        for i in range(n):
            xi = rows[i]
            yi = ys[i]
            G = yi * float(w @ xi) - 1.0
            a_old = alpha[i]
            if a_old <= 0.0:
                PG = min(G, 0.0)
            elif a_old >= C:
                PG = max(G, 0.0)
            else:
                PG = G
            if abs(PG) > viol:
                viol = abs(PG)
            if abs(PG) > 1e-12 and qdiag[i] > 0.0:
                a_new = min(max(a_old - G / qdiag[i], 0.0), C)
                delta = (a_new - a_old) * yi
                if delta != 0.0:
                    alpha[i] = a_new
                    w += delta * xi
        if viol < tol:
            break
    return sweep, viol
