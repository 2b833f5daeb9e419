"""Fast dictionary-scan and basis-assembly kernels.

Scanning all (omega, b) candidates against the current residual is the hot
loop of the greedy solver.  For a fixed direction omega the required sums
have the shape

    sum_{q : t_q + b > 0} c_q * (t_q + b)^p,      t_q = omega . x_q,

and expanding (t+b)^p binomially turns the whole bias sweep into prefix
sums of the moments c_q * t_q^p over nodes binned by the equispaced bias
grid.  One pass over the nodes per direction therefore prices every bias
at once.

All kernels accumulate serially in fixed node order, so results are
bit-identical regardless of thread count.  The numba-compiled versions are
used when numba imports; plain numpy fallbacks (same math, same binning)
otherwise.
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

__all__ = [
    "HAVE_NUMBA",
    "ridge_scan",
    "expansion_on_nodes",
    "gram_row",
    "self_energy",
]


def _heaviside_pow(t, p):
    """relu(t)^p with the power-0 case meaning the strict Heaviside 1[t>0]."""
    return np.where(t > 0.0, np.maximum(t, 0.0) ** p, 0.0)


def _binom_table(pmax):
    table = np.zeros((pmax + 1, pmax + 1))
    for n in range(pmax + 1):
        table[n, 0] = 1.0
        for r in range(1, n + 1):
            table[n, r] = table[n - 1, r - 1] + (table[n - 1, r] if r <= n - 1 else 0.0)
    return table


@njit(cache=True)
def _first_active(t, b0, h, hinv, nb):
    # smallest j with b0 + j*h > -t, exact w.r.t. the float grid values
    r = (-t - b0) * hinv
    j = int(np.floor(r)) + 1
    if j < 0:
        j = 0
    if j > nb:
        j = nb
    while j > 0 and (b0 + (j - 1) * h) > -t:
        j -= 1
    while j < nb and not ((b0 + j * h) > -t):
        j += 1
    return j


@njit(cache=True)
def _ridge_scan_jit(X, vrows, vpows, gmat, gscale, gpow, Xb, brows, bpows,
                    omegas, b0, h, binom, pmax, out):
    m, d = X.shape
    s = Xb.shape[0]
    nw = omegas.shape[0]
    nb = out.shape[1]
    nr = vrows.shape[0]
    nrb = brows.shape[0]
    has_grad = 1 if gmat.shape[0] == m else 0
    ntot = nr + has_grad + nrb
    hinv = 1.0 / h

    pows = np.empty(ntot, dtype=np.int64)
    for r in range(nr):
        pows[r] = vpows[r]
    if has_grad == 1:
        pows[nr] = gpow
    for r in range(nrb):
        pows[nr + has_grad + r] = bpows[r]

    S = np.empty((ntot, nb + 1, pmax + 1))
    bpow = np.empty(pmax + 1)

    for iw in range(nw):
        for a in range(ntot):
            for j in range(nb + 1):
                for p in range(pmax + 1):
                    S[a, j, p] = 0.0

        for q in range(m):
            t = 0.0
            for dd in range(d):
                t += omegas[iw, dd] * X[q, dd]
            j = _first_active(t, b0, h, hinv, nb)
            if j >= nb:
                continue
            for r in range(nr):
                c = vrows[r, q]
                tp = 1.0
                for p in range(vpows[r] + 1):
                    S[r, j, p] += c * tp
                    tp *= t
            if has_grad == 1:
                c = 0.0
                for dd in range(d):
                    c += gmat[q, dd] * omegas[iw, dd]
                c *= gscale
                tp = 1.0
                for p in range(gpow + 1):
                    S[nr, j, p] += c * tp
                    tp *= t

        for q in range(s):
            t = 0.0
            for dd in range(d):
                t += omegas[iw, dd] * Xb[q, dd]
            j = _first_active(t, b0, h, hinv, nb)
            if j >= nb:
                continue
            for r in range(nrb):
                c = brows[r, q]
                tp = 1.0
                for p in range(bpows[r] + 1):
                    S[nr + has_grad + r, j, p] += c * tp
                    tp *= t

        for a in range(ntot):
            for p in range(pmax + 1):
                acc = 0.0
                for j in range(nb):
                    acc += S[a, j, p]
                    S[a, j, p] = acc

        for j in range(nb):
            bj = b0 + j * h
            bpow[0] = 1.0
            for p in range(1, pmax + 1):
                bpow[p] = bpow[p - 1] * bj
            acc = 0.0
            for a in range(ntot):
                P = pows[a]
                for p in range(P + 1):
                    acc += binom[P, p] * bpow[P - p] * S[a, j, p]
            out[iw, j] = acc


def _ridge_scan_numpy(X, vrows, vpows, gmat, gscale, gpow, Xb, brows, bpows,
                      omegas, b0, h, binom, pmax, out):
    m = X.shape[0]
    nb = out.shape[1]
    bgrid = b0 + h * np.arange(nb)
    has_grad = gmat.shape[0] == m

    def moments(points, coef, power, w, acc):
        t = points @ w
        jmin = np.searchsorted(bgrid, -t, side="right")
        for p in range(power + 1):
            binned = np.zeros(nb + 1)
            np.add.at(binned, jmin, coef * t**p)
            partial = np.cumsum(binned[:nb])
            acc += binom[power, p] * bgrid ** (power - p) * partial

    for iw in range(omegas.shape[0]):
        w = omegas[iw]
        acc = np.zeros(nb)
        for r in range(vrows.shape[0]):
            moments(X, vrows[r], int(vpows[r]), w, acc)
        if has_grad:
            moments(X, gscale * (gmat @ w), int(gpow), w, acc)
        for r in range(brows.shape[0]):
            moments(Xb, brows[r], int(bpows[r]), w, acc)
        out[iw] = acc


def ridge_scan(X, vrows, vpows, gmat, gscale, gpow, Xb, brows, bpows,
               omegas, b_samples):
    """Sum of binomial ridge moments for every (omega, b) candidate.

    out[iw, j] = sum_r sum_q vrows[r, q] * relu(t_q + b_j)^vpows[r]
               + gscale * sum_q (gmat[q] . omega) * relu(t_q + b_j)^gpow
               + sum_r sum_q brows[r, q] * relu(tb_q + b_j)^bpows[r]

    with strict activation t + b > 0 (a power-0 factor is the Heaviside).
    `b_samples` must be the equispaced grid b0 + j*h.
    """
    nb = b_samples.shape[0]
    b0 = float(b_samples[0])
    h = float(b_samples[1] - b_samples[0])
    pmax = int(max([int(p) for p in vpows] + [int(gpow)]
                   + [int(p) for p in bpows]))
    binom = _binom_table(pmax)
    out = np.empty((omegas.shape[0], nb))
    impl = _ridge_scan_jit if HAVE_NUMBA else _ridge_scan_numpy
    impl(np.ascontiguousarray(X), np.ascontiguousarray(vrows),
         np.asarray(vpows, dtype=np.int64), np.ascontiguousarray(gmat),
         float(gscale), int(gpow), np.ascontiguousarray(Xb),
         np.ascontiguousarray(brows), np.asarray(bpows, dtype=np.int64),
         np.ascontiguousarray(omegas), b0, h, binom, pmax, out)
    return out


@njit(cache=True)
def _expansion_on_nodes_jit(T, Tb, omegas, coeffs, k, uvals, ugrad, ubvals):
    n, m = T.shape
    d = omegas.shape[1]
    for i in range(n):
        a = coeffs[i]
        for q in range(m):
            t = T[i, q]
            if t > 0.0:
                tk1 = 1.0
                for _ in range(k - 1):
                    tk1 *= t
                uvals[q] += a * tk1 * t
                ag = a * k * tk1
                for dd in range(d):
                    ugrad[q, dd] += ag * omegas[i, dd]
        for q in range(Tb.shape[1]):
            t = Tb[i, q]
            if t > 0.0:
                tk = 1.0
                for _ in range(k):
                    tk *= t
                ubvals[q] += a * tk


def expansion_on_nodes(T, Tb, omegas, coeffs, k):
    """Values, gradients and boundary values of an expansion from cached
    preactivations T (n, m) and Tb (n, s)."""
    m = T.shape[1]
    s = Tb.shape[1]
    d = omegas.shape[1]
    uvals = np.zeros(m)
    ugrad = np.zeros((m, d))
    ubvals = np.zeros(s)
    if T.shape[0] == 0:
        return uvals, ugrad, ubvals
    if HAVE_NUMBA:
        _expansion_on_nodes_jit(T, Tb, omegas, coeffs, int(k),
                                uvals, ugrad, ubvals)
    else:
        uvals[:] = (np.maximum(T, 0.0) ** k).T @ coeffs
        der = k * _heaviside_pow(T, k - 1)
        ugrad[:] = (der * coeffs[:, None]).T @ omegas
        ubvals[:] = (np.maximum(Tb, 0.0) ** k).T @ coeffs
    return uvals, ugrad, ubvals


@njit(cache=True)
def _gram_row_jit(T, Tb, omdots, wq, a0, wb_scaled, k, t_new, tb_new, row):
    n, m = T.shape
    for i in range(n):
        grad_acc = 0.0
        val_acc = 0.0
        for q in range(m):
            ti = T[i, q]
            tn = t_new[q]
            if ti > 0.0 and tn > 0.0:
                pi = 1.0
                pn = 1.0
                for _ in range(k - 1):
                    pi *= ti
                    pn *= tn
                grad_acc += wq[q] * pi * pn
                if a0 != 0.0:
                    val_acc += wq[q] * (pi * ti) * (pn * tn)
        bacc = 0.0
        for q in range(Tb.shape[1]):
            ti = Tb[i, q]
            tn = tb_new[q]
            if ti > 0.0 and tn > 0.0:
                pi = 1.0
                pn = 1.0
                for _ in range(k):
                    pi *= ti
                    pn *= tn
                bacc += wb_scaled[q] * pi * pn
        row[i] = k * k * omdots[i] * grad_acc + a0 * val_acc + bacc


def gram_row(T, Tb, omegas, wq, a0, wb_scaled, k, t_new, tb_new, omega_new):
    """a_delta(g_i, g_new) for every cached basis neuron g_i."""
    n = T.shape[0]
    row = np.zeros(n)
    if n == 0:
        return row
    omdots = omegas @ omega_new
    if HAVE_NUMBA:
        _gram_row_jit(T, Tb, omdots, wq, float(a0), wb_scaled, int(k),
                      t_new, tb_new, row)
    else:
        der = _heaviside_pow(T, k - 1)
        dern = _heaviside_pow(t_new, k - 1)
        row = k * k * omdots * (der @ (wq * dern))
        if a0 != 0.0:
            row = row + a0 * (np.maximum(T, 0.0) ** k
                              @ (wq * np.maximum(t_new, 0.0) ** k))
        row = row + (np.maximum(Tb, 0.0) ** k
                     @ (wb_scaled * np.maximum(tb_new, 0.0) ** k))
    return row


@njit(cache=True)
def _self_energy_jit(t_new, tb_new, wq, a0, wb_scaled, k):
    acc = 0.0
    for q in range(t_new.shape[0]):
        t = t_new[q]
        if t > 0.0:
            p = 1.0
            for _ in range(k - 1):
                p *= t
            acc += wq[q] * k * k * p * p
            if a0 != 0.0:
                acc += wq[q] * a0 * (p * t) * (p * t)
    for q in range(tb_new.shape[0]):
        t = tb_new[q]
        if t > 0.0:
            p = 1.0
            for _ in range(k):
                p *= t
            acc += wb_scaled[q] * p * p
    return acc


def self_energy(t_new, tb_new, wq, a0, wb_scaled, k):
    """a_delta(g, g) of one neuron from its preactivations."""
    if HAVE_NUMBA:
        return float(_self_energy_jit(t_new, tb_new, wq, float(a0),
                                      wb_scaled, int(k)))
    der = _heaviside_pow(t_new, k - 1)
    acc = float(k * k * np.einsum("q,q->", wq, der * der))
    if a0 != 0.0:
        v = np.maximum(t_new, 0.0) ** k
        acc += float(a0 * np.einsum("q,q->", wq, v * v))
    vb = np.maximum(tb_new, 0.0) ** k
    acc += float(np.einsum("q,q->", wb_scaled, vb * vb))
    return acc
