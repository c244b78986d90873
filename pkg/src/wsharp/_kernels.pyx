# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Wolfe min-norm-point kernel.

Hot path of every certification sweep: each grid point triggers at least
one projection of the origin onto a small polytope.  The algorithm is the
same corral method as wsharp.geometry._minnorm_py; the affine subproblem
is solved by Gaussian elimination with partial pivoting on the bordered
Gram system.  A negative return status signals numerical breakdown and the
caller reruns the numpy twin.
"""

from libc.stdlib cimport free, malloc
from libc.math cimport sqrt


cdef int _solve_bordered(double* M, double* rhs, double* sol, int k) noexcept nogil:
    """Solve the (k+1)x(k+1) system M sol = rhs in place. 0 ok, -1 singular."""
    cdef int n = k + 1
    cdef int i, j, p, piv
    cdef double best, tmp, factor
    for i in range(n):
        sol[i] = rhs[i]
    for p in range(n):
        piv = p
        best = M[p * n + p]
        if best < 0:
            best = -best
        for i in range(p + 1, n):
            tmp = M[i * n + p]
            if tmp < 0:
                tmp = -tmp
            if tmp > best:
                best = tmp
                piv = i
        if best < 1e-14:
            return -1
        if piv != p:
            for j in range(n):
                tmp = M[p * n + j]
                M[p * n + j] = M[piv * n + j]
                M[piv * n + j] = tmp
            tmp = sol[p]
            sol[p] = sol[piv]
            sol[piv] = tmp
        for i in range(p + 1, n):
            factor = M[i * n + p] / M[p * n + p]
            if factor != 0.0:
                for j in range(p, n):
                    M[i * n + j] -= factor * M[p * n + j]
                sol[i] -= factor * sol[p]
    for p in range(n - 1, -1, -1):
        tmp = sol[p]
        for j in range(p + 1, n):
            tmp -= M[p * n + j] * sol[j]
        sol[p] = tmp / M[p * n + p]
    return 0


def wolfe_min_norm(const double[:, ::1] verts, double tol, int max_iter, double[::1] out):
    """Fill ``out`` with the min-norm point of conv(verts).

    Returns (status, iterations); status 0 ok, 1 iteration cap, -1 breakdown
    (caller should fall back to the pure-Python kernel).
    """
    cdef int m = verts.shape[0]
    cdef int n = verts.shape[1]
    cdef int cap = n + 3          # corral never exceeds n+1 affinely independent points
    cdef int k = 0                # current corral size
    cdef int i, j, c, jbest, iters, status
    cdef double acc, xx, dbest, scale, stop_slack, theta, r, s

    cdef int* corral = <int*> malloc(cap * sizeof(int))
    cdef double* lam = <double*> malloc(cap * sizeof(double))
    cdef double* w = <double*> malloc(cap * sizeof(double))
    cdef double* x = <double*> malloc(n * sizeof(double))
    cdef double* M = <double*> malloc((cap + 1) * (cap + 1) * sizeof(double))
    cdef double* rhs = <double*> malloc((cap + 1) * sizeof(double))
    if corral == NULL or lam == NULL or w == NULL or x == NULL or M == NULL or rhs == NULL:
        free(corral); free(lam); free(w); free(x); free(M); free(rhs)
        raise MemoryError()

    status = 0
    iters = 0
    try:
        with nogil:
            # start from the vertex of least norm
            jbest = 0
            dbest = 0.0
            for j in range(n):
                dbest += verts[0, j] * verts[0, j]
            scale = dbest
            for i in range(1, m):
                acc = 0.0
                for j in range(n):
                    acc += verts[i, j] * verts[i, j]
                if acc < dbest:
                    dbest = acc
                    jbest = i
                if acc > scale:
                    scale = acc
            corral[0] = jbest
            lam[0] = 1.0
            k = 1
            for j in range(n):
                x[j] = verts[jbest, j]
            stop_slack = 0.5 * tol * (1.0 + sqrt(scale))

            while True:
                iters += 1
                if iters > max_iter:
                    status = 1
                    break
                # major cycle: vertex minimizing <x, p>
                jbest = 0
                dbest = 0.0
                for j in range(n):
                    dbest += x[j] * verts[0, j]
                for i in range(1, m):
                    acc = 0.0
                    for j in range(n):
                        acc += x[j] * verts[i, j]
                    if acc < dbest:
                        dbest = acc
                        jbest = i
                xx = 0.0
                for j in range(n):
                    xx += x[j] * x[j]
                if dbest >= xx - stop_slack:
                    break
                acc = 0.0
                for c in range(k):
                    if corral[c] == jbest:
                        acc = 1.0
                        break
                if acc == 1.0:
                    break  # stalled on a corral member: optimal within noise
                if k >= cap:
                    status = -1
                    break
                corral[k] = jbest
                lam[k] = 0.0
                k += 1

                # minor cycles
                while True:
                    iters += 1
                    if iters > max_iter:
                        status = 1
                        break
                    # bordered Gram system over the corral
                    for i in range(k):
                        for j in range(i, k):
                            acc = 0.0
                            for c in range(n):
                                acc += verts[corral[i], c] * verts[corral[j], c]
                            M[i * (k + 1) + j] = acc
                            M[j * (k + 1) + i] = acc
                        M[i * (k + 1) + k] = 1.0
                        rhs[i] = 0.0
                    for j in range(k):
                        M[k * (k + 1) + j] = 1.0
                    M[k * (k + 1) + k] = 0.0
                    rhs[k] = 1.0
                    if _solve_bordered(M, rhs, w, k) != 0:
                        status = -1
                        break
                    acc = 1.0
                    for i in range(k):
                        if w[i] < -1e-12:
                            acc = 0.0
                            break
                    if acc == 1.0:
                        s = 0.0
                        for i in range(k):
                            lam[i] = w[i] if w[i] > 0.0 else 0.0
                            s += lam[i]
                        if s > 0.0:
                            for i in range(k):
                                lam[i] /= s
                        for j in range(n):
                            x[j] = 0.0
                        for i in range(k):
                            for j in range(n):
                                x[j] += lam[i] * verts[corral[i], j]
                        break
                    # shrink toward the affine minimizer
                    theta = 1.0
                    for i in range(k):
                        if w[i] < -1e-12:
                            r = lam[i] / (lam[i] - w[i])
                            if r < theta:
                                theta = r
                    s = 0.0
                    for i in range(k):
                        lam[i] = (1.0 - theta) * lam[i] + theta * w[i]
                        if lam[i] < 1e-14:
                            lam[i] = 0.0
                        s += lam[i]
                    # drop zeroed corral members
                    c = 0
                    for i in range(k):
                        if lam[i] > 0.0:
                            corral[c] = corral[i]
                            lam[c] = lam[i]
                            c += 1
                    if c == 0:
                        corral[0] = corral[k - 1]
                        lam[0] = 1.0
                        c = 1
                        s = 1.0
                    k = c
                    if s > 0.0:
                        for i in range(k):
                            lam[i] /= s
                    for j in range(n):
                        x[j] = 0.0
                    for i in range(k):
                        for j in range(n):
                            x[j] += lam[i] * verts[corral[i], j]
                if status != 0:
                    break
        for j in range(n):
            out[j] = x[j]
    finally:
        free(corral); free(lam); free(w); free(x); free(M); free(rhs)
    return status, iters
