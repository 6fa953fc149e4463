"""Compiled inner loops.

Two families of kernels live here. Scatter kernels push each support point
of an input across a set of lattice offsets into a dense buffer over a box
(input-driven; cost scales with the support). Run kernels evaluate at
consecutive output points along the last axis from dense input arrays
(output-driven; cost scales with the number of points).

Offsets are flat: a lattice vector u maps to u @ strides of the box, so
x - u is flat(x) - off(u) whenever both ends lie in the box.
"""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def scatter_sum(fidx, fval, offs, k0, k1, out):
    """out[y + u] += f(y) for every support index y and offset u in offs[k0:k1]."""
    for i in range(fidx.shape[0]):
        y = fidx[i]
        v = fval[i]
        for k in range(k0, k1):
            out[y + offs[k]] += v


@njit(cache=True, nogil=True)
def _scatter_touch(fidx, fval, offs, k0, k1, buf, mark, touched, nt):
    for i in range(fidx.shape[0]):
        y = fidx[i]
        v = fval[i]
        for k in range(k0, k1):
            x = y + offs[k]
            if not mark[x]:
                mark[x] = True
                touched[nt] = x
                nt += 1
            buf[x] += v
    return nt


@njit(cache=True, nogil=True)
def shell_max(fidx, fval, offs, ptr, rhos, weights, buf, mark, touched, best, hits):
    """best[x] = max over rho of weights[rho] * sum_{|u|^2 = rho} f(x - u).

    hits[x] counts the radii whose shell reaches x; callers fold in the
    implicit zero of the remaining radii.
    """
    for j in range(rhos.shape[0]):
        rho = rhos[j]
        k0 = ptr[rho]
        k1 = ptr[rho + 1]
        if k0 == k1:
            continue
        w = weights[j]
        nt = _scatter_touch(fidx, fval, offs, k0, k1, buf, mark, touched, 0)
        for t in range(nt):
            x = touched[t]
            val = w * buf[x]
            if hits[x] == 0 or val > best[x]:
                best[x] = val
            hits[x] += 1
            buf[x] = 0
            mark[x] = False


@njit(cache=True, nogil=True)
def bilinear_sliced_scatter(fidx, fval, gidx, gval, offs, ptr, lam,
                            bufA, bufB, markA, markB, touchedA, touchedB, out, markO, touchedO):
    """Sum over r of (shell-r sums of f) * (shell-(lam - r) sums of g)."""
    no = 0
    for r in range(lam + 1):
        ka0 = ptr[r]
        ka1 = ptr[r + 1]
        kb0 = ptr[lam - r]
        kb1 = ptr[lam - r + 1]
        if ka0 == ka1 or kb0 == kb1:
            continue
        na = _scatter_touch(fidx, fval, offs, ka0, ka1, bufA, markA, touchedA, 0)
        nb = _scatter_touch(gidx, gval, offs, kb0, kb1, bufB, markB, touchedB, 0)
        for t in range(na):
            x = touchedA[t]
            if markB[x]:
                out[x] += bufA[x] * bufB[x]
                if not markO[x]:
                    markO[x] = True
                    touchedO[no] = x
                    no += 1
        for t in range(na):
            x = touchedA[t]
            bufA[x] = 0
            markA[x] = False
        for t in range(nb):
            x = touchedB[t]
            bufB[x] = 0
            markB[x] = False
    return no


@njit(cache=True, nogil=True)
def _link(idx, val, offs, k0, k1, head, nxt, evals, touched):
    ne = 0
    nt = 0
    for i in range(idx.shape[0]):
        y = idx[i]
        v = val[i]
        for k in range(k0, k1):
            x = y + offs[k]
            if head[x] < 0:
                touched[nt] = x
                nt += 1
            evals[ne] = v
            nxt[ne] = head[x]
            head[x] = ne
            ne += 1
    return nt


@njit(cache=True, nogil=True)
def bilinear_direct_scatter(fidx, fval, gidx, gval, offs, ptr, lam,
                            headF, headG, nextF, nextG, valF, valG,
                            touchedF, touchedG, out, markO, touchedO):
    """Every nonzero term f(x - u) g(x - v) with |u|^2 + |v|^2 = lam, one product at a time.

    For each r the f-entries reaching x through the r-shell and the g-entries
    reaching x through the (lam - r)-shell are chained per x, then every
    pair of chained entries contributes its own product. Returns the number
    of touched output points and the number of pair products taken.
    """
    no = 0
    pairs = 0
    for r in range(lam + 1):
        ka0 = ptr[r]
        ka1 = ptr[r + 1]
        kb0 = ptr[lam - r]
        kb1 = ptr[lam - r + 1]
        if ka0 == ka1 or kb0 == kb1:
            continue
        na = _link(fidx, fval, offs, ka0, ka1, headF, nextF, valF, touchedF)
        nb = _link(gidx, gval, offs, kb0, kb1, headG, nextG, valG, touchedG)
        for t in range(na):
            x = touchedF[t]
            if headG[x] < 0:
                continue
            e = headF[x]
            while e >= 0:
                a = valF[e]
                e2 = headG[x]
                while e2 >= 0:
                    out[x] += a * valG[e2]
                    pairs += 1
                    e2 = nextG[e2]
                e = nextF[e]
            if not markO[x]:
                markO[x] = True
                touchedO[no] = x
                no += 1
        for t in range(na):
            headF[touchedF[t]] = -1
        for t in range(nb):
            headG[touchedG[t]] = -1
    return no, pairs


# -- output-driven run kernels ---------------------------------------------------

@njit(cache=True, nogil=True)
def tuple_scatter(skeys, svals, okeys, ovals, optr, offs, out_keys, out):
    """out[x] += f_0(x - u_0) * prod_i f_i(x - u_i) over support points of f_0 and tuples in offs.

    The other factors are sorted flat keys okeys[optr[i]:optr[i + 1]], found by bisection.
    """
    T, k = offs.shape
    for a in range(skeys.shape[0]):
        for t in range(T):
            x = skeys[a] + offs[t, 0]
            prod = svals[a]
            for i in range(1, k):
                y = x - offs[t, i]
                lo = optr[i - 1]
                hi = optr[i]
                j = lo + np.searchsorted(okeys[lo:hi], y)
                if j < hi and okeys[j] == y:
                    prod = prod * ovals[j]
                else:
                    prod = prod * 0
                    break
            if prod != 0:
                out[np.searchsorted(out_keys, x)] += prod


@njit(cache=True, nogil=True, error_model="numpy")
def run_direct(F, G, starts, lens, offs, ptr, lam, chunk, out):
    """Pair-by-pair evaluation at runs of consecutive points.

    Runs are consecutive along the last (unit-stride) axis; out receives the
    concatenated run values. Four u-rows are blocked together so each loaded
    g value feeds four separate products.
    """
    pos = 0
    for run in range(starts.shape[0]):
        b0 = starts[run]
        n = lens[run]
        for c0 in range(0, n, chunk):
            w = min(chunk, n - c0)
            base = b0 + c0
            acc = np.zeros(w, dtype=out.dtype)
            for r in range(lam + 1):
                k = ptr[r]
                kend = ptr[r + 1]
                m0 = ptr[lam - r]
                m1 = ptr[lam - r + 1]
                if k == kend or m0 == m1:
                    continue
                while k + 4 <= kend:
                    F0 = F[base - offs[k]: base - offs[k] + w]
                    F1 = F[base - offs[k + 1]: base - offs[k + 1] + w]
                    F2 = F[base - offs[k + 2]: base - offs[k + 2] + w]
                    F3 = F[base - offs[k + 3]: base - offs[k + 3] + w]
                    for m in range(m0, m1):
                        Gv = G[base - offs[m]: base - offs[m] + w]
                        for t in range(w):
                            g = Gv[t]
                            acc[t] += F0[t] * g + F1[t] * g + F2[t] * g + F3[t] * g
                    k += 4
                while k < kend:
                    Fu = F[base - offs[k]: base - offs[k] + w]
                    for m in range(m0, m1):
                        Gv = G[base - offs[m]: base - offs[m] + w]
                        for t in range(w):
                            acc[t] += Fu[t] * Gv[t]
                    k += 1
            out[pos + c0: pos + c0 + w] = acc[:w]
        pos += n


@njit(cache=True, nogil=True, error_model="numpy")
def run_sliced(F, G, starts, lens, loffs, lnorm, lam, chunk, out):
    """Shell sums of f and g per radius, multiplied pointwise, at runs of points.

    loffs is the ball in lexicographic order with squared norms lnorm, so one
    streaming pass fills every shell sum while keeping neighbouring offsets
    on shared cache lines.
    """
    A = np.empty((lam + 1, chunk), dtype=out.dtype)
    B = np.empty((lam + 1, chunk), dtype=out.dtype)
    acc = np.empty(chunk, dtype=out.dtype)
    pos = 0
    for run in range(starts.shape[0]):
        b0 = starts[run]
        n = lens[run]
        for c0 in range(0, n, chunk):
            w = min(chunk, n - c0)
            base = b0 + c0
            A[:, :w] = 0
            B[:, :w] = 0
            acc[:w] = 0
            for k in range(loffs.shape[0]):
                q = lnorm[k]
                src = base - loffs[k]
                Ar = A[q]
                Br = B[q]
                for t in range(w):
                    Ar[t] += F[src + t]
                    Br[t] += G[src + t]
            for q in range(lam + 1):
                Ar = A[q]
                Br = B[lam - q]
                for t in range(w):
                    acc[t] += Ar[t] * Br[t]
            out[pos + c0: pos + c0 + w] = acc[:w]
        pos += n
