"""Optional numba kernels with pure-numpy fallbacks.

Four hot paths are worth compiling: the batched matrix exponential used to
generate almost complex structures, the pointwise frame-index contractions
between grid fields (einsum materializes broadcast temporaries; the kernels
stream each grid tile once), the batched small-matrix inverse, and the
per-point alternating eigen-iteration of the curvature-positivity scan.
Everything FFT-shaped stays in scipy where compiled kernels cannot win.

Backend selection: the environment flag ``CYFRAME_NO_NUMBA=1`` forces the
numpy path; otherwise numba is used when importable.  The flag is read at
call time so tests can exercise both paths in one process.  ``fastmath`` is
deliberately not used anywhere: reports must be bit-identical across runs,
and fastmath licenses reassociation.

The exponential runs a *fixed* order-13 Pade approximant under scaling and
squaring, with one batch-wide scaling exponent, so the arithmetic performed
never depends on roundoff-level details of the data.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


__all__ = [
    "HAS_NUMBA",
    "numba_active",
    "expm_pade13",
    "field_matmul",
    "field_pair",
    "batch_inverse",
    "wedge_triple_sups",
    "max_abs",
    "frobenius_sq",
    "biquadratic_min_scan",
    "kronecker_starts",
]


def numba_active() -> bool:
    """True when the compiled backend is available and not disabled."""
    if os.environ.get("CYFRAME_NO_NUMBA", "") == "1":
        return False
    if HAS_NUMBA:
        hint = os.environ.get("CYFRAME_THREADS", "")
        if hint.isdigit() and int(hint) >= 1:
            try:
                numba.set_num_threads(int(hint))
            except ValueError:
                pass
        return True
    return False


# ---------------------------------------------------------------------------
# fixed-order Pade-13 scaling-and-squaring exponential

_PADE13_B = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_PADE13_THETA = 5.371920351148152


def _batch_scaling_exponent(a: np.ndarray) -> int:
    # shared 1-norm bound: one exponent for the whole batch keeps the
    # arithmetic identical for every member
    one_norm = np.abs(a).sum(axis=-2).max()
    if one_norm <= _PADE13_THETA or one_norm == 0.0:
        return 0
    return int(math.ceil(math.log2(one_norm / _PADE13_THETA)))


def _expm_pade13_numpy(a: np.ndarray, s: int) -> np.ndarray:
    b = _PADE13_B
    m = a.shape[-1]
    eye = np.eye(m, dtype=a.dtype)
    x = a / float(2 ** s)
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x2 @ x4
    u = x @ (x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2)
             + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * eye)
    v = (x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2)
         + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * eye)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


@njit(cache=True)
def _mm(a, b, out):  # pragma: no cover - compiled
    m = a.shape[0]
    for r in range(m):
        for c in range(m):
            acc = 0.0
            for k in range(m):
                acc += a[r, k] * b[k, c]
            out[r, c] = acc


@njit(cache=True)
def _expm_pade13_numba(a, s, b):  # pragma: no cover - compiled
    # all work buffers are hoisted out of the point loop; per-point
    # allocation costs more than the arithmetic at this matrix size
    npts, m, _ = a.shape
    out = np.empty_like(a)
    x = np.empty((m, m))
    x2 = np.empty((m, m))
    x4 = np.empty((m, m))
    x6 = np.empty((m, m))
    u = np.empty((m, m))
    v = np.empty((m, m))
    w = np.empty((m, m))
    aug = np.empty((m, 2 * m))
    scale = 1.0 / (2.0 ** s)
    ok = True
    for p in range(npts):
        for r in range(m):
            for c in range(m):
                x[r, c] = a[p, r, c] * scale
        _mm(x, x, x2)
        _mm(x2, x2, x4)
        _mm(x2, x4, x6)
        for r in range(m):
            for c in range(m):
                w[r, c] = b[13] * x6[r, c] + b[11] * x4[r, c] + b[9] * x2[r, c]
        _mm(x6, w, u)
        for r in range(m):
            for c in range(m):
                u[r, c] += b[7] * x6[r, c] + b[5] * x4[r, c] + b[3] * x2[r, c]
            u[r, r] += b[1]
        _mm(x, u, w)
        for r in range(m):
            for c in range(m):
                u[r, c] = b[12] * x6[r, c] + b[10] * x4[r, c] + b[8] * x2[r, c]
        _mm(x6, u, v)
        for r in range(m):
            for c in range(m):
                v[r, c] += b[6] * x6[r, c] + b[4] * x4[r, c] + b[2] * x2[r, c]
            v[r, r] += b[0]
        # solve (v - u) r = (v + u) with u held in w
        for r in range(m):
            for c in range(m):
                aug[r, c] = v[r, c] - w[r, c]
                aug[r, m + c] = v[r, c] + w[r, c]
        for col in range(m):
            piv = col
            best = abs(aug[col, col])
            for r in range(col + 1, m):
                mag = abs(aug[r, col])
                if mag > best:
                    best = mag
                    piv = r
            if best == 0.0:
                ok = False
                break
            if piv != col:
                for c in range(2 * m):
                    tmp = aug[col, c]
                    aug[col, c] = aug[piv, c]
                    aug[piv, c] = tmp
            inv_piv = 1.0 / aug[col, col]
            for c in range(col, 2 * m):
                aug[col, c] = aug[col, c] * inv_piv
            for r in range(m):
                if r != col:
                    f = aug[r, col]
                    if f != 0.0:
                        for c in range(col, 2 * m):
                            aug[r, c] = aug[r, c] - f * aug[col, c]
        if not ok:
            break
        for r in range(m):
            for c in range(m):
                x[r, c] = aug[r, m + c]
        for _ in range(s):
            _mm(x, x, x2)
            for r in range(m):
                for c in range(m):
                    x[r, c] = x2[r, c]
        out[p] = x
    return out, ok


_PADE13_B_ARR = np.array(_PADE13_B)


def expm_pade13(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of a batch ``(..., m, m)``, order-13 Pade.

    The scaling exponent is shared across the batch (from the largest
    1-norm), so results are reproducible bit-for-bit per backend.
    """
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    s = _batch_scaling_exponent(a)
    lead = a.shape[:-2]
    # the compiled kernel is float64-only; complex input (not on any hot
    # path) takes the numpy branch
    if numba_active() and a.ndim >= 3 and not np.iscomplexobj(a):
        flat = np.ascontiguousarray(
            a.reshape((-1,) + a.shape[-2:]).astype(np.float64))
        out, ok = _expm_pade13_numba(flat, s, _PADE13_B_ARR)
        if not ok:
            raise np.linalg.LinAlgError("Singular matrix")
        return out.reshape(lead + a.shape[-2:])
    return _expm_pade13_numpy(a, s)


# ---------------------------------------------------------------------------
# pointwise frame contractions
#
# A "field matrix" is a small index block with trailing grid axes.  The two
# contraction layouts below cover every frame-index product in the package;
# grid axes are flattened to one streaming axis and processed in tiles small
# enough to keep the output block cache-resident across the contraction.

_TILE = 4096


@njit(cache=True)
def _field_matmul_numba(a, b):  # pragma: no cover - compiled
    di, dk, npts = a.shape
    dj = b.shape[1]
    out = np.empty((di, dj, npts), a.dtype)
    for g0 in range(0, npts, _TILE):
        g1 = min(g0 + _TILE, npts)
        for i in range(di):
            for j in range(dj):
                arow = a[i, 0]
                brow = b[0, j]
                orow = out[i, j]
                for g in range(g0, g1):
                    orow[g] = arow[g] * brow[g]
                for k in range(1, dk):
                    arow = a[i, k]
                    brow = b[k, j]
                    for g in range(g0, g1):
                        orow[g] += arow[g] * brow[g]
    return out


@njit(cache=True)
def _field_pair_numba(a, b):  # pragma: no cover - compiled
    dk, di, npts = a.shape
    dj = b.shape[1]
    out = np.empty((di, dj, npts), a.dtype)
    for g0 in range(0, npts, _TILE):
        g1 = min(g0 + _TILE, npts)
        for i in range(di):
            for j in range(dj):
                arow = a[0, i]
                brow = b[0, j]
                orow = out[i, j]
                for g in range(g0, g1):
                    orow[g] = arow[g] * brow[g]
                for k in range(1, dk):
                    arow = a[k, i]
                    brow = b[k, j]
                    for g in range(g0, g1):
                        orow[g] += arow[g] * brow[g]
    return out


_KERNEL_DTYPES = (np.dtype(np.float64), np.dtype(np.complex128))


def _field_args(a: np.ndarray, b: np.ndarray):
    dt = np.result_type(a, b)
    if dt not in _KERNEL_DTYPES or a.ndim < 3:
        return None
    a3 = np.asarray(a.reshape(a.shape[:2] + (-1,)), dtype=dt)
    b3 = np.asarray(b.reshape(b.shape[:2] + (-1,)), dtype=dt)
    return a3, b3


def field_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise matrix product: ``out[i, j] = sum_k a[i, k] * b[k, j]``.

    ``a`` is ``(di, dk) + shape``, ``b`` is ``(dk, dj) + shape`` with the
    same trailing grid shape.
    """
    if numba_active():
        args = _field_args(a, b)
        if args is not None:
            out = _field_matmul_numba(*args)
            return out.reshape(out.shape[:2] + a.shape[2:])
    return np.einsum("ik...,kj...->ij...", a, b)


def field_pair(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise Gram pairing: ``out[i, j] = sum_k a[k, i] * b[k, j]``."""
    if numba_active():
        args = _field_args(a, b)
        if args is not None:
            out = _field_pair_numba(*args)
            return out.reshape(out.shape[:2] + a.shape[2:])
    return np.einsum("ki...,kj...->ij...", a, b)


# ---------------------------------------------------------------------------
# allocation-free reductions


@njit(cache=True)
def _max_abs2_cplx(a):  # pragma: no cover - compiled
    m = 0.0
    for x in range(a.shape[0]):
        v = a[x]
        m = max(m, v.real * v.real + v.imag * v.imag)
    return m


@njit(cache=True)
def _max_abs_real(a):  # pragma: no cover - compiled
    m = 0.0
    for x in range(a.shape[0]):
        m = max(m, abs(a[x]))
    return m


def max_abs(a: np.ndarray) -> float:
    """``sup |a|`` without materializing the modulus array."""
    a = np.asarray(a)
    if a.size == 0:
        raise ValueError("max_abs of an empty array")
    if numba_active() and a.dtype in _KERNEL_DTYPES:
        flat = a.reshape(-1)
        if flat.dtype == np.complex128:
            return math.sqrt(_max_abs2_cplx(flat))
        return _max_abs_real(flat)
    return float(np.abs(a).max())


@njit(cache=True)
def _fro2_cplx(a):  # pragma: no cover - compiled
    npts, m, mm = a.shape
    out = np.empty(npts)
    for p in range(npts):
        s = 0.0
        for r in range(m):
            for c in range(mm):
                v = a[p, r, c]
                s += v.real * v.real + v.imag * v.imag
        out[p] = s
    return out


def frobenius_sq(a: np.ndarray) -> np.ndarray:
    """Squared Frobenius norm over the last two axes of a batch."""
    a = np.asarray(a)
    if numba_active() and a.ndim == 3 and a.dtype == np.complex128:
        return _fro2_cplx(a)
    return np.einsum("...ab,...ab->...", a, np.conj(a)).real


# ---------------------------------------------------------------------------
# batched small-matrix inverse


@njit(cache=True)
def _batch_inverse_numba(a):  # pragma: no cover - compiled
    npts, m, _ = a.shape
    out = np.empty_like(a)
    work = np.empty((m, 2 * m), a.dtype)
    ok = True
    for p in range(npts):
        for r in range(m):
            for c in range(m):
                work[r, c] = a[p, r, c]
                work[r, m + c] = 0.0
            work[r, m + r] = 1.0
        good = True
        for col in range(m):
            piv = col
            best = abs(work[col, col])
            for r in range(col + 1, m):
                mag = abs(work[r, col])
                if mag > best:
                    best = mag
                    piv = r
            if best == 0.0:
                good = False
                break
            if piv != col:
                for c in range(2 * m):
                    tmp = work[col, c]
                    work[col, c] = work[piv, c]
                    work[piv, c] = tmp
            inv_piv = 1.0 / work[col, col]
            for c in range(col, 2 * m):
                work[col, c] = work[col, c] * inv_piv
            for r in range(m):
                if r == col:
                    continue
                f = work[r, col]
                if f != 0.0:
                    for c in range(col, 2 * m):
                        work[r, c] = work[r, c] - f * work[col, c]
        if not good:
            ok = False
            break
        for r in range(m):
            for c in range(m):
                out[p, r, c] = work[r, m + c]
    return out, ok


def batch_inverse(a: np.ndarray) -> np.ndarray:
    """Inverse of a batch ``(..., m, m)`` by partial-pivot elimination.

    Raises :class:`numpy.linalg.LinAlgError` on a singular member, matching
    the numpy fallback.
    """
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    if (numba_active() and a.ndim >= 3
            and a.dtype in _KERNEL_DTYPES):
        flat = np.ascontiguousarray(a.reshape((-1,) + a.shape[-2:]))
        out, ok = _batch_inverse_numba(flat)
        if not ok:
            raise np.linalg.LinAlgError("Singular matrix")
        return out.reshape(a.shape)
    return np.linalg.inv(a)


# ---------------------------------------------------------------------------
# fused 3-form wedge assembly
#
# Component (a, b, c) of a (2-form wedge 1-form) product; the same formula
# evaluates (1-form wedge 2-form) because the degrees commute.  The kernel
# accumulates two such sums against a precomputed derivative term and
# returns sup norms only, so no grid-sized temporaries are allocated.


@njit(cache=True)
def _wedge_acc(acc, two_row, one_row, sign, w):  # pragma: no cover - compiled
    if sign > 0:
        for x in range(w):
            acc[x] += two_row[x] * one_row[x]
    else:
        for x in range(w):
            acc[x] -= two_row[x] * one_row[x]


@njit(cache=True)
def _wedge_triple_numba(lhs, two_a, one_a, two_b, one_b,
                        triples):  # pragma: no cover - compiled
    nt = triples.shape[0]
    m = two_a.shape[0]
    npts = lhs.shape[1]
    sups = np.zeros((nt, 4))
    curv = np.empty(_TILE, np.complex128)
    conn = np.empty(_TILE, np.complex128)
    for t in range(nt):
        a = triples[t, 0]
        b = triples[t, 1]
        c = triples[t, 2]
        res_m = 0.0
        lhs_m = 0.0
        curv_m = 0.0
        conn_m = 0.0
        for g0 in range(0, npts, _TILE):
            g1 = min(g0 + _TILE, npts)
            w = g1 - g0
            for x in range(w):
                curv[x] = 0.0
                conn[x] = 0.0
            # two streams per pass; the accumulator tile stays cache-resident
            for k in range(m):
                _wedge_acc(curv, two_a[k, a, b, g0:g1], one_a[k, c, g0:g1],
                           1, w)
                _wedge_acc(curv, two_a[k, a, c, g0:g1], one_a[k, b, g0:g1],
                           -1, w)
                _wedge_acc(curv, two_a[k, b, c, g0:g1], one_a[k, a, g0:g1],
                           1, w)
                _wedge_acc(conn, two_b[k, a, b, g0:g1], one_b[k, c, g0:g1],
                           1, w)
                _wedge_acc(conn, two_b[k, a, c, g0:g1], one_b[k, b, g0:g1],
                           -1, w)
                _wedge_acc(conn, two_b[k, b, c, g0:g1], one_b[k, a, g0:g1],
                           1, w)
            lrow = lhs[t, g0:g1]
            for x in range(w):
                cu = curv[x]
                co = conn[x]
                lv = lrow[x]
                rv = lv - cu + co
                res_m = max(res_m, rv.real * rv.real + rv.imag * rv.imag)
                lhs_m = max(lhs_m, lv.real * lv.real + lv.imag * lv.imag)
                curv_m = max(curv_m, cu.real * cu.real + cu.imag * cu.imag)
                conn_m = max(conn_m, co.real * co.real + co.imag * co.imag)
        sups[t, 0] = math.sqrt(res_m)
        sups[t, 1] = math.sqrt(lhs_m)
        sups[t, 2] = math.sqrt(curv_m)
        sups[t, 3] = math.sqrt(conn_m)
    return sups


def wedge_triple_sups(lhs: np.ndarray, two_a: np.ndarray, one_a: np.ndarray,
                      two_b: np.ndarray, one_b: np.ndarray,
                      triples) -> np.ndarray:
    """Sup norms of ``lhs - sum_k two_a[k]^one_a[k] + sum_k two_b[k]^one_b[k]``
    per index triple.

    ``lhs`` holds the precomputed 3-form components, one row per triple;
    returns an ``(len(triples), 4)`` array of sups: residual, lhs, first
    sum, second sum.  Falls back to numpy term assembly.
    """
    tarr = np.asarray(triples, dtype=np.int64)
    nt = tarr.shape[0]
    shape = one_a.shape[2:]
    cplx = np.complex128
    lhs2 = np.asarray(lhs.reshape(nt, -1), dtype=cplx)
    if numba_active():
        return _wedge_triple_numba(
            lhs2,
            np.asarray(two_a.reshape(two_a.shape[:3] + (-1,)), dtype=cplx),
            np.asarray(one_a.reshape(one_a.shape[:2] + (-1,)), dtype=cplx),
            np.asarray(two_b.reshape(two_b.shape[:3] + (-1,)), dtype=cplx),
            np.asarray(one_b.reshape(one_b.shape[:2] + (-1,)), dtype=cplx),
            tarr)
    sups = np.zeros((nt, 4))
    for t, (a, b, c) in enumerate(tarr):
        curv = np.zeros(shape, dtype=complex)
        conn = np.zeros(shape, dtype=complex)
        for k in range(two_a.shape[0]):
            curv = curv + (two_a[k, a, b] * one_a[k, c]
                           - two_a[k, a, c] * one_a[k, b]
                           + two_a[k, b, c] * one_a[k, a])
            conn = conn + (two_b[k, a, b] * one_b[k, c]
                           - two_b[k, a, c] * one_b[k, b]
                           + two_b[k, b, c] * one_b[k, a])
        res = lhs2[t].reshape(shape) - curv + conn
        sups[t, 0] = np.abs(res).max()
        sups[t, 1] = np.abs(lhs2[t]).max()
        sups[t, 2] = np.abs(curv).max()
        sups[t, 3] = np.abs(conn).max()
    return sups


# ---------------------------------------------------------------------------
# biquadratic positivity scan
#
# For a Hermitian biquadratic form Q(X, Y) = R[i,j,k,l] X_i conj(X_j)
# Y_k conj(Y_l) the scan estimates min Q over unit X, Y by alternating
# minimal-eigenvector updates from a fixed set of quasi-random starts.
# A fixed iteration count (no early exit) keeps both backends identical.


def kronecker_starts(count: int, n: int) -> np.ndarray:
    """Deterministic low-discrepancy unit vectors in C^n.

    A Kronecker (golden-ratio family) sequence fills the angle cube; vectors
    are built from it and normalized.  Purely a scan heuristic: coverage,
    not uniformity, is what matters, and determinism is required.
    """
    # generalized golden ratios (plastic-number family)
    dims = 2 * n
    phi = 1.0
    for _ in range(32):
        phi = (1.0 + phi) ** (1.0 / (dims + 1))
    alphas = np.array([phi ** -(j + 1) for j in range(dims)])
    k = np.arange(1, count + 1)[:, None]
    u = np.mod(0.5 + k * alphas[None, :], 1.0)
    re = np.cos(2.0 * np.pi * u[:, :n]) * (0.5 + 0.5 * u[:, n:])
    im = np.sin(2.0 * np.pi * u[:, :n]) * (1.0 - 0.5 * u[:, n:])
    z = re + 1j * im
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z


@njit(cache=True)
def _scan_kernel_numba(r, starts, iters):  # pragma: no cover - compiled
    npts = r.shape[0]
    nstart = starts.shape[0]
    out = np.empty(npts)
    for p in range(npts):
        rp = r[p]
        best = 1e300
        for s in range(nstart):
            x0 = starts[s, 0]
            x1 = starts[s, 1]
            y0 = starts[s, 0]
            y1 = starts[s, 1]
            for _ in range(iters):
                # M(X)_{kl} = R[i,j,k,l] x_i conj(x_j), Hermitian 2x2
                m00 = 0.0 + 0.0j
                m01 = 0.0 + 0.0j
                m11 = 0.0 + 0.0j
                for i in range(2):
                    xi = x0 if i == 0 else x1
                    for j in range(2):
                        xjc = np.conj(x0 if j == 0 else x1)
                        w = xi * xjc
                        m00 += rp[i, j, 0, 0] * w
                        m01 += rp[i, j, 0, 1] * w
                        m11 += rp[i, j, 1, 1] * w
                h00 = m00.real
                h11 = m11.real
                diff = h00 - h11
                rad = math.sqrt(diff * diff
                                + 4.0 * (m01.real ** 2 + m01.imag ** 2))
                lam = 0.5 * (h00 + h11 - rad)
                v0 = m01
                v1r = lam - h00
                nrm = math.sqrt(v0.real ** 2 + v0.imag ** 2 + v1r * v1r)
                # sum_{kl} M_kl y_k conj(y_l) is the Hermitian form of M^T,
                # so the minimizer is the conjugated eigenvector
                if nrm > 1e-300:
                    y0 = np.conj(v0) / nrm
                    y1 = v1r / nrm + 0.0j
                else:
                    y0 = 1.0 + 0.0j
                    y1 = 0.0 + 0.0j
                # N(Y)_{ij} = R[i,j,k,l] y_k conj(y_l)
                a00 = 0.0 + 0.0j
                a01 = 0.0 + 0.0j
                a11 = 0.0 + 0.0j
                for k in range(2):
                    yk = y0 if k == 0 else y1
                    for l in range(2):
                        ylc = np.conj(y0 if l == 0 else y1)
                        w = yk * ylc
                        a00 += rp[0, 0, k, l] * w
                        a01 += rp[0, 1, k, l] * w
                        a11 += rp[1, 1, k, l] * w
                h00 = a00.real
                h11 = a11.real
                diff = h00 - h11
                rad = math.sqrt(diff * diff
                                + 4.0 * (a01.real ** 2 + a01.imag ** 2))
                lam = 0.5 * (h00 + h11 - rad)
                v0 = a01
                v1r = lam - h00
                nrm = math.sqrt(v0.real ** 2 + v0.imag ** 2 + v1r * v1r)
                if nrm > 1e-300:
                    x0 = np.conj(v0) / nrm
                    x1 = v1r / nrm + 0.0j
                else:
                    x0 = 1.0 + 0.0j
                    x1 = 0.0 + 0.0j
            # value at the final (X, Y)
            val = 0.0
            for i in range(2):
                xi = x0 if i == 0 else x1
                for j in range(2):
                    xjc = np.conj(x0 if j == 0 else x1)
                    for k in range(2):
                        yk = y0 if k == 0 else y1
                        for l in range(2):
                            ylc = np.conj(y0 if l == 0 else y1)
                            val += (rp[i, j, k, l] * xi * xjc * yk * ylc).real
            if val < best:
                best = val
        out[p] = best
    return out


def _scan_kernel_numpy(r: np.ndarray, starts: np.ndarray,
                       iters: int) -> np.ndarray:
    # vectorized over points and starts; same alternation and fixed
    # iteration count as the compiled kernel
    npts = r.shape[0]
    nstart = starts.shape[0]
    x = np.broadcast_to(starts[None, :, :], (npts, nstart, 2)).copy()
    y = x.copy()

    def min_eigvec(h):
        h00 = h[..., 0, 0].real
        h11 = h[..., 1, 1].real
        h01 = h[..., 0, 1]
        rad = np.sqrt((h00 - h11) ** 2 + 4.0 * np.abs(h01) ** 2)
        lam = 0.5 * (h00 + h11 - rad)
        v0 = h01
        v1 = (lam - h00).astype(complex)
        nrm = np.sqrt(np.abs(v0) ** 2 + np.abs(v1) ** 2)
        small = nrm <= 1e-300
        v0 = np.where(small, 1.0, v0)
        v1 = np.where(small, 0.0, v1)
        nrm = np.where(small, 1.0, nrm)
        return lam, np.stack([v0 / nrm, v1 / nrm], axis=-1)

    for _ in range(iters):
        # sum_{kl} M_kl y_k conj(y_l) is the Hermitian form of M^T, so the
        # minimizer is the conjugated eigenvector
        m = np.einsum("pijkl,psi,psj->pskl", r, x, np.conj(x),
                      optimize=True)
        _, y = min_eigvec(m)
        y = np.conj(y)
        a = np.einsum("pijkl,psk,psl->psij", r, y, np.conj(y),
                      optimize=True)
        _, x = min_eigvec(a)
        x = np.conj(x)
    val = np.einsum("pijkl,psi,psj,psk,psl->ps", r, x, np.conj(x),
                    y, np.conj(y), optimize=True).real
    return val.min(axis=1)


def biquadratic_min_scan(r: np.ndarray, starts: np.ndarray,
                         iters: int = 24) -> np.ndarray:
    """Per-point minimum of the biquadratic form over unit ``X, Y``.

    ``r`` has shape ``(npts, n, n, n, n)``; only ``n = 2`` needs the
    alternating scan (for ``n = 1`` the form is a single real number and the
    caller short-circuits).  This is a documented heuristic: alternating
    minimal-eigenvector iteration from ``len(starts)`` quasi-random starts
    with a fixed iteration budget and no early exit.
    """
    if r.ndim != 5 or r.shape[1:] != (2, 2, 2, 2):
        raise ValueError(f"expected (npts, 2, 2, 2, 2), got {r.shape}")
    r = np.ascontiguousarray(r.astype(complex))
    starts = np.ascontiguousarray(starts.astype(complex))
    if numba_active():
        return _scan_kernel_numba(r, starts, iters)
    return _scan_kernel_numpy(r, starts, iters)
