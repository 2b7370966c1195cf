# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled element loop: same local matrices as tevem.vem_local, one pass per cell.

All work arrays are sized for one vertex count and reused across the cells of
a group.  Dense solves are Gaussian elimination with partial pivoting on the
6x6 (or 3x3) projector systems.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

# 3-point Gauss-Legendre on [0, 1]
cdef double GS[3]
cdef double GW[3]
GS[0] = 0.5 - 0.5 * sqrt(0.6)
GS[1] = 0.5
GS[2] = 0.5 + 0.5 * sqrt(0.6)
GW[0] = 5.0 / 18.0
GW[1] = 8.0 / 18.0
GW[2] = 5.0 / 18.0

# exponents of the 15 moments (a + b <= 4) and the 6 P2 monomials
cdef int MA[15]
cdef int MB[15]
cdef int _i = 0
cdef int _d, _b
for _d in range(5):
    for _b in range(_d + 1):
        MA[_i] = _d - _b
        MB[_i] = _b
        _i += 1
cdef int PA[6]
cdef int PB[6]
PA[:] = [0, 1, 0, 2, 1, 0]
PB[:] = [0, 0, 1, 0, 1, 2]


# P1 coefficients of d/dxi and d/deta of each P2 monomial
cdef double DXC[6][3]
cdef double DYC[6][3]
for _d in range(6):
    for _b in range(3):
        DXC[_d][_b] = 0.0
        DYC[_d][_b] = 0.0
DXC[1][0] = 1.0; DXC[3][1] = 2.0; DXC[4][2] = 1.0
DYC[2][0] = 1.0; DYC[4][1] = 1.0; DYC[5][2] = 2.0


cdef inline int moment_index(int a, int b) nogil:
    cdef int d = a + b
    return d * (d + 1) // 2 + b


cdef inline double ipow(double x, int p) nogil:
    cdef double r = 1.0
    while p > 0:
        r *= x
        p -= 1
    return r


cdef inline void mono(double x, double y, double* out) nogil:
    out[0] = 1.0
    out[1] = x
    out[2] = y
    out[3] = x * x
    out[4] = x * y
    out[5] = y * y


cdef inline void mono_grad(double x, double y, double* gx, double* gy) nogil:
    gx[0] = 0.0; gx[1] = 1.0; gx[2] = 0.0; gx[3] = 2.0 * x; gx[4] = y; gx[5] = 0.0
    gy[0] = 0.0; gy[1] = 0.0; gy[2] = 1.0; gy[3] = 0.0; gy[4] = x; gy[5] = 2.0 * y


cdef int solve(double* A, double* B, int n, int ncol) nogil:
    """Solve A X = B in place (A n x n, B n x ncol, row-major); B <- X."""
    cdef int i, j, k, p
    cdef double piv, f, tmp
    for k in range(n):
        p = k
        piv = fabs(A[k * n + k])
        for i in range(k + 1, n):
            if fabs(A[i * n + k]) > piv:
                piv = fabs(A[i * n + k])
                p = i
        if piv == 0.0:
            return -1
        if p != k:
            for j in range(n):
                tmp = A[k * n + j]; A[k * n + j] = A[p * n + j]; A[p * n + j] = tmp
            for j in range(ncol):
                tmp = B[k * ncol + j]; B[k * ncol + j] = B[p * ncol + j]; B[p * ncol + j] = tmp
        for i in range(k + 1, n):
            f = A[i * n + k] / A[k * n + k]
            if f != 0.0:
                for j in range(k, n):
                    A[i * n + j] -= f * A[k * n + j]
                for j in range(ncol):
                    B[i * ncol + j] -= f * B[k * ncol + j]
    for k in range(n - 1, -1, -1):
        for j in range(ncol):
            tmp = B[k * ncol + j]
            for i in range(k + 1, n):
                tmp -= A[k * n + i] * B[i * ncol + j]
            B[k * ncol + j] = tmp / A[k * n + k]
    return 0


def element_blocks(double[:, ::1] coords, long[::1] offsets, double[::1] hloc,
                   double n_index, int nk):
    """Stacked local matrices for cells that all have ``nk`` vertices.

    Returns ``(A_W, A_V, B_uu, B_uphi, B_psiu)`` with leading dimension equal
    to the number of cells.
    """
    cdef int nc = offsets.shape[0] - 1
    cdef int n = nk
    cdef int m = 3 * n
    if n_index <= 1.0:
        raise ValueError("index of refraction must satisfy n > 1")

    AW_arr = np.zeros((nc, m, m))
    AV_arr = np.zeros((nc, n, n))
    Buu_arr = np.zeros((nc, m, m))
    Bup_arr = np.zeros((nc, m, n))
    Bpu_arr = np.zeros((nc, n, m))
    cdef double[:, :, ::1] AW = AW_arr
    cdef double[:, :, ::1] AV = AV_arr
    cdef double[:, :, ::1] Buu = Buu_arr
    cdef double[:, :, ::1] Bup = Bup_arr
    cdef double[:, :, ::1] Bpu = Bpu_arr

    # work arrays
    cdef double[:, ::1] X = np.empty((n, 2))
    cdef double[:, ::1] XI = np.empty((n, 2))
    cdef double[::1] L = np.empty(n)
    cdef double[:, ::1] T = np.empty((n, 2))
    cdef double[:, ::1] NU = np.empty((n, 2))
    cdef double[::1] mom = np.empty(15)
    cdef double[:, ::1] M = np.empty((6, 6))
    cdef double[:, ::1] K = np.empty((6, 6))
    cdef double[:, ::1] D = np.empty((m, 6))
    cdef double[:, ::1] lhs = np.empty((6, 6))
    cdef double[:, ::1] PiD = np.empty((6, m))
    cdef double[:, ::1] PiG2 = np.empty((6, m))
    cdef double[:, ::1] PiL = np.empty((6, m))
    cdef double[:, ::1] PiG1 = np.empty((3, n))
    cdef double[:, ::1] lhs3 = np.empty((3, 3))
    cdef double[:, ::1] vdm = np.empty((6, m))
    cdef double[:, ::1] dvm = np.empty((6, m))
    cdef double[::1] S0 = np.empty(m)
    cdef double[:, ::1] R = np.empty((m, m))
    cdef double[:, ::1] R1 = np.empty((n, n))
    cdef double[:, ::1] tmp6 = np.empty((6, m))
    cdef double[:, ::1] tmpM = np.empty((m, m))
    cdef double[::1] wts = np.empty(m)
    cdef double[6] mv
    cdef double[6] gx
    cdef double[6] gy
    cdef double[6] lap
    cdef double[6] dn

    cdef int cell, i, j, a, b, e, g, q, o, al, be, ga, ia, ib
    cdef double area, cx, cy, cross, h, hh, diam, dx, dy, s, px, py, wq, val, t
    cdef double h0, h1, h2, h3, nx, ny, tx, ty, Qnn, Qnt, Qn0, Qn1, half
    cdef double c1 = 1.0 / (n_index - 1.0)
    cdef double cn = n_index / (n_index - 1.0)
    cdef double sigma, tr, inv_n = 1.0 / n
    # Hessians of m3, m4, m5 in scaled coordinates
    cdef double HS[3][4]
    HS[0][:] = [2.0, 0.0, 0.0, 0.0]
    HS[1][:] = [0.0, 1.0, 1.0, 0.0]
    HS[2][:] = [0.0, 0.0, 0.0, 2.0]

    for cell in range(nc):
        o = offsets[cell]
        for i in range(n):
            X[i, 0] = coords[o + i, 0]
            X[i, 1] = coords[o + i, 1]
        # ---- geometry
        # shoelace relative to the first vertex to avoid cancellation
        area = 0.0; cx = 0.0; cy = 0.0
        for i in range(n):
            j = (i + 1) % n
            px = X[i, 0] - X[0, 0]; py = X[i, 1] - X[0, 1]
            dx = X[j, 0] - X[0, 0]; dy = X[j, 1] - X[0, 1]
            cross = px * dy - dx * py
            area += cross
            cx += (px + dx) * cross
            cy += (py + dy) * cross
        area *= 0.5
        if area <= 0.0:
            raise ValueError(f"cell {cell} of the group is degenerate or clockwise")
        cx = X[0, 0] + cx / (6.0 * area)
        cy = X[0, 1] + cy / (6.0 * area)
        diam = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                dx = X[i, 0] - X[j, 0]
                dy = X[i, 1] - X[j, 1]
                s = dx * dx + dy * dy
                if s > diam:
                    diam = s
        h = sqrt(diam)
        hh = h * h
        for i in range(n):
            j = (i + 1) % n
            dx = X[j, 0] - X[i, 0]
            dy = X[j, 1] - X[i, 1]
            L[i] = sqrt(dx * dx + dy * dy)
            T[i, 0] = dx / L[i]
            T[i, 1] = dy / L[i]
            NU[i, 0] = T[i, 1]
            NU[i, 1] = -T[i, 0]
            XI[i, 0] = (X[i, 0] - cx) / h
            XI[i, 1] = (X[i, 1] - cy) / h
        for al in range(6):
            lap[al] = 0.0
        lap[3] = 2.0 / hh
        lap[5] = 2.0 / hh

        # ---- moments of xi^a eta^b, a + b <= 4
        for q in range(15):
            mom[q] = 0.0
        for e in range(n):
            j = (e + 1) % n
            cross = XI[e, 0] * XI[j, 1] - XI[e, 1] * XI[j, 0]
            for g in range(3):
                px = XI[e, 0] + GS[g] * (XI[j, 0] - XI[e, 0])
                py = XI[e, 1] + GS[g] * (XI[j, 1] - XI[e, 1])
                for q in range(15):
                    mom[q] += GW[g] * cross * ipow(px, MA[q]) * ipow(py, MB[q]) / (2 + MA[q] + MB[q])
        for q in range(15):
            mom[q] *= hh
        for al in range(6):
            for be in range(6):
                M[al, be] = mom[moment_index(PA[al] + PA[be], PB[al] + PB[be])]
        # grad-grad Gram matrix from the P1 coefficients of the monomial derivatives
        for al in range(6):
            for be in range(al, 6):
                val = 0.0
                for ga in range(3):
                    for q in range(3):
                        val += (DXC[al][ga] * DXC[be][q] + DYC[al][ga] * DYC[be][q]) * M[ga, q]
                K[al, be] = val / hh
                K[be, al] = val / hh

        # ---- DOF evaluation matrix of the monomials
        for i in range(n):
            mono(XI[i, 0], XI[i, 1], mv)
            mono_grad(XI[i, 0], XI[i, 1], gx, gy)
            for be in range(6):
                D[3 * i, be] = mv[be]
                D[3 * i + 1, be] = gx[be] / h
                D[3 * i + 2, be] = gy[be] / h

        # ---- Hessian projector
        for al in range(6):
            for j in range(m):
                PiD[al, j] = 0.0
            for be in range(6):
                lhs[al, be] = 0.0
        for al in range(3):
            for be in range(6):
                val = 0.0
                for i in range(n):
                    val += D[3 * i, al] * D[3 * i, be]
                lhs[al, be] = inv_n * val
            for i in range(n):
                PiD[al, 3 * i] = inv_n * D[3 * i, al]
        lhs[3, 3] = 4.0 * area / (hh * hh)
        lhs[4, 4] = 2.0 * area / (hh * hh)
        lhs[5, 5] = 4.0 * area / (hh * hh)
        for al in range(3, 6):
            for e in range(n):
                a = 3 * e
                b = 3 * ((e + 1) % n)
                nx = NU[e, 0]; ny = NU[e, 1]
                Qn0 = (HS[al - 3][0] * nx + HS[al - 3][1] * ny) / hh
                Qn1 = (HS[al - 3][2] * nx + HS[al - 3][3] * ny) / hh
                Qnn = Qn0 * nx + Qn1 * ny
                Qnt = Qn0 * T[e, 0] + Qn1 * T[e, 1]
                half = 0.5 * L[e] * Qnn
                PiD[al, a + 1] += half * nx
                PiD[al, a + 2] += half * ny
                PiD[al, b + 1] += half * nx
                PiD[al, b + 2] += half * ny
                PiD[al, b] += Qnt
                PiD[al, a] -= Qnt
        if solve(&lhs[0, 0], &PiD[0, 0], 6, m) != 0:
            raise ValueError("singular Hessian projector system")

        # ---- gradient projector on V (P1)
        for al in range(3):
            for j in range(n):
                PiG1[al, j] = 0.0
        for be in range(3):
            val = 0.0
            for e in range(n):
                j = (e + 1) % n
                val += 0.5 * L[e] * (D[3 * e, be] + D[3 * j, be])
            lhs3[0, be] = val
            lhs3[1, be] = K[1, be]
            lhs3[2, be] = K[2, be]
        for e in range(n):
            j = (e + 1) % n
            half = 0.5 * L[e]
            PiG1[0, e] += half
            PiG1[0, j] += half
            PiG1[1, e] += half * NU[e, 0] / h
            PiG1[1, j] += half * NU[e, 0] / h
            PiG1[2, e] += half * NU[e, 1] / h
            PiG1[2, j] += half * NU[e, 1] / h
        if solve(&lhs3[0, 0], &PiG1[0, 0], 3, n) != 0:
            raise ValueError("singular gradient projector system")

        # ---- boundary terms int v d_nu m_a and int (d_nu v) m_a
        for al in range(6):
            for j in range(m):
                vdm[al, j] = 0.0
                dvm[al, j] = 0.0
        for e in range(n):
            ia = 3 * e
            ib = 3 * ((e + 1) % n)
            j = (e + 1) % n
            tx = T[e, 0]; ty = T[e, 1]; nx = NU[e, 0]; ny = NU[e, 1]
            for g in range(3):
                s = GS[g]
                wq = GW[g] * L[e]
                px = XI[e, 0] + s * (XI[j, 0] - XI[e, 0])
                py = XI[e, 1] + s * (XI[j, 1] - XI[e, 1])
                mono(px, py, mv)
                mono_grad(px, py, gx, gy)
                h0 = 1.0 - 3.0 * s * s + 2.0 * s * s * s
                h1 = (s - 2.0 * s * s + s * s * s) * L[e]
                h2 = 3.0 * s * s - 2.0 * s * s * s
                h3 = (-s * s + s * s * s) * L[e]
                for al in range(6):
                    dn[al] = (gx[al] * nx + gy[al] * ny) / h
                    t = wq * dn[al]
                    vdm[al, ia] += t * h0
                    vdm[al, ia + 1] += t * h1 * tx
                    vdm[al, ia + 2] += t * h1 * ty
                    vdm[al, ib] += t * h2
                    vdm[al, ib + 1] += t * h3 * tx
                    vdm[al, ib + 2] += t * h3 * ty
                    t = wq * mv[al]
                    dvm[al, ia + 1] += t * (1.0 - s) * nx
                    dvm[al, ia + 2] += t * (1.0 - s) * ny
                    dvm[al, ib + 1] += t * s * nx
                    dvm[al, ib + 2] += t * s * ny

        # ---- cell mean of v from the enhanced space
        for j in range(m):
            val = 0.0
            for be in range(6):
                val += M[0, be] * PiD[be, j]
            S0[j] = val

        # ---- gradient projector on W (P2)
        for be in range(6):
            lhs[0, be] = M[0, be]
        for al in range(1, 6):
            for be in range(6):
                lhs[al, be] = K[al, be]
        for j in range(m):
            PiG2[0, j] = S0[j]
            for al in range(1, 6):
                PiG2[al, j] = vdm[al, j] - lap[al] * S0[j]
        if solve(&lhs[0, 0], &PiG2[0, 0], 6, m) != 0:
            raise ValueError("singular P2 gradient projector system")

        # ---- L2 projection of the Laplacian
        for al in range(6):
            for be in range(6):
                lhs[al, be] = M[al, be]
            for j in range(m):
                PiL[al, j] = dvm[al, j] - vdm[al, j] + lap[al] * S0[j]
        if solve(&lhs[0, 0], &PiL[0, 0], 6, m) != 0:
            raise ValueError("singular mass matrix")

        # ---- A_W: consistency + vertex stabilization, scaled by 1/(n-1)
        # consistency = c1 * PiD^T H PiD with H diagonal on the quadratic block
        for i in range(m):
            for j in range(i, m):
                val = (4.0 * PiD[3, i] * PiD[3, j] + 2.0 * PiD[4, i] * PiD[4, j]
                       + 4.0 * PiD[5, i] * PiD[5, j]) * area / (hh * hh) * c1
                tmpM[i, j] = val
                tmpM[j, i] = val
        tr = 0.0
        for i in range(m):
            tr += tmpM[i, i]
        sigma = tr / m
        for i in range(n):
            wts[3 * i] = 1.0
            wts[3 * i + 1] = hloc[o + i] * hloc[o + i]
            wts[3 * i + 2] = hloc[o + i] * hloc[o + i]
        for i in range(m):
            for j in range(m):
                val = 0.0
                for be in range(6):
                    val += D[i, be] * PiD[be, j]
                R[i, j] = (1.0 if i == j else 0.0) - val
        for i in range(m):
            for j in range(i, m):
                val = 0.0
                for q in range(m):
                    val += R[q, i] * wts[q] * R[q, j]
                AW[cell, i, j] = tmpM[i, j] + sigma * val
                AW[cell, j, i] = AW[cell, i, j]

        # ---- A_V
        for i in range(n):
            for j in range(n):
                val = 0.0
                for be in range(3):
                    val += D[3 * i, be] * PiG1[be, j]
                R1[i, j] = (1.0 if i == j else 0.0) - val
        for i in range(n):
            for j in range(i, n):
                val = 0.0
                for al in range(3):
                    for be in range(3):
                        val += PiG1[al, i] * K[al, be] * PiG1[be, j]
                for q in range(n):
                    val += R1[q, i] * R1[q, j]
                AV[cell, i, j] = val
                AV[cell, j, i] = val

        # ---- B blocks
        # tmp6 = M PiL
        for al in range(6):
            for j in range(m):
                val = 0.0
                for be in range(6):
                    val += M[al, be] * PiL[be, j]
                tmp6[al, j] = val
        for i in range(m):
            for j in range(m):
                val = 0.0
                for al in range(6):
                    val += cn * PiD[al, i] * tmp6[al, j] + c1 * tmp6[al, i] * PiD[al, j]
                Buu[cell, i, j] = val
        # B_uphi = -PiG2^T K[:, :3] PiG1
        for i in range(m):
            for j in range(n):
                val = 0.0
                for al in range(6):
                    for be in range(3):
                        val += PiG2[al, i] * K[al, be] * PiG1[be, j]
                Bup[cell, i, j] = -val
        # B_psiu = cn * PiG1^T M[:3] PiD
        for i in range(n):
            for j in range(m):
                val = 0.0
                for al in range(3):
                    for be in range(6):
                        val += PiG1[al, i] * M[al, be] * PiD[be, j]
                Bpu[cell, i, j] = cn * val

    return AW_arr, AV_arr, Buu_arr, Bup_arr, Bpu_arr
