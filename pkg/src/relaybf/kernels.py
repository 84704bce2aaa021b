"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is fixed at import time: numba ``@njit`` kernels are used when
numba imports cleanly, unless ``RELAYBF_PURE_NUMPY=1`` (or the standard
``NUMBA_DISABLE_JIT``) is present in the environment, in which case the
vectorized numpy implementations run instead.  Both paths consume the same
pre-drawn random arrays and agree to floating-point roundoff, so results
never depend on the backend beyond ~1e-12 relative; ``benchmarks/`` times
the two side by side.

Kernels
-------
batch_quadform :
    Re(w^H M w) for a batch of vectors against one Hermitian form.
quadforms_many :
    The same against a stack of forms (randomization rounding, tail
    sampling).
chain_stats :
    Genie-decomposed two-slot Alamouti amplify-and-forward chain: per-user
    post-combining signal / interference / noise powers plus QPSK bit
    errors, accumulated over a batch of code blocks.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_wanted() -> bool:
    flag = os.environ.get("RELAYBF_PURE_NUMPY", "").strip()
    if flag not in ("", "0"):
        return False
    if "NUMBA_DISABLE_JIT" in os.environ:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_wanted()


def backend() -> str:
    """Name of the active backend, "numba" or "numpy"."""
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def _np_batch_quadform(m, wb):
    return np.einsum("cj,cj->c", wb.conj() @ m, wb).real


def _np_quadforms_many(mats, wb):
    out = np.empty((wb.shape[0], mats.shape[0]))
    for k in range(mats.shape[0]):
        out[:, k] = _np_batch_quadform(mats[k], wb)
    return out


def _np_chain_stats(p1, p2, gconj, v1, v2, group_of, sym, nr, nu):
    nblocks = sym.shape[0]
    nusers = p1.shape[0]
    s0 = sym[:, :, 0]
    s1 = sym[:, :, 1]

    # Signal + interference ride the exact per-group chain algebra
    # y1_j = (g^H V1 sqrt(P_j) f_j) s_j0 - (g^H V2 sqrt(P_j) f_j^*) s_j1^*;
    # totals over groups come from one matmul, own-group parts by gather.
    y1_tot = s0 @ p1.T - s1.conj() @ p2.T
    y2_tot = s1 @ p1.T + s0.conj() @ p2.T
    own1 = p1[np.arange(nusers), group_of]
    own2 = p2[np.arange(nusers), group_of]
    s0_own = s0[:, group_of]
    s1_own = s1[:, group_of]
    y1_sig = s0_own * own1 - s1_own.conj() * own2
    y2_sig = s1_own * own1 + s0_own.conj() * own2
    y1_int = y1_tot - y1_sig
    y2_int = y2_tot - y2_sig

    # Relay noise takes the full weight matrices each block.
    t1 = nr[:, :, 0] @ v1.T - nr[:, :, 1].conj() @ v2.T
    t2 = nr[:, :, 1] @ v1.T + nr[:, :, 0].conj() @ v2.T
    y1_rn = t1 @ gconj.T
    y2_rn = t2 @ gconj.T

    y1_nz = y1_rn + nu[:, :, 0]
    y2_nz = y2_rn + nu[:, :, 1]

    denom = np.abs(own1) ** 2 + np.abs(own2) ** 2

    def combine(a, b):
        # H^H [y1; y2^*] / (|h1|^2 + |h2|^2), columns are the two entries
        q = b.conj()
        z0 = (own1.conj() * a + own2 * q) / denom
        z1 = (-own2.conj() * a + own1 * q) / denom
        return z0, z1

    zs0, zs1 = combine(y1_sig, y2_sig)
    zi0, zi1 = combine(y1_int, y2_int)
    zn0, zn1 = combine(y1_nz, y2_nz)

    sig = (np.abs(zs0) ** 2 + np.abs(zs1) ** 2).sum(axis=0)
    intf = (np.abs(zi0) ** 2 + np.abs(zi1) ** 2).sum(axis=0)
    noise = (np.abs(zn0) ** 2 + np.abs(zn1) ** 2).sum(axis=0)

    # Hard QPSK decisions on the full combined estimate; the second entry
    # estimates the conjugate of the second symbol.
    d0 = zs0 + zi0 + zn0
    d1 = (zs1 + zi1 + zn1).conj()
    err = np.zeros(nusers, dtype=np.int64)
    err += ((d0.real > 0) != (s0_own.real > 0)).sum(axis=0)
    err += ((d0.imag > 0) != (s0_own.imag > 0)).sum(axis=0)
    err += ((d1.real > 0) != (s1_own.real > 0)).sum(axis=0)
    err += ((d1.imag > 0) != (s1_own.imag > 0)).sum(axis=0)
    bits = 4 * nblocks
    return sig, intf, noise, err, bits


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    from numba import njit

    @njit(cache=True)
    def _nb_batch_quadform(m, wb):
        ncand, n = wb.shape
        out = np.empty(ncand)
        for c in range(ncand):
            acc = 0.0
            for i in range(n):
                wi = wb[c, i].conjugate()
                row = 0.0 + 0.0j
                for j in range(n):
                    row += m[i, j] * wb[c, j]
                acc += (wi * row).real
            out[c] = acc
        return out

    @njit(cache=True)
    def _nb_quadforms_many(mats, wb):
        ncand = wb.shape[0]
        nmats = mats.shape[0]
        out = np.empty((ncand, nmats))
        for k in range(nmats):
            out[:, k] = _nb_batch_quadform(mats[k], wb)
        return out

    @njit(cache=True)
    def _nb_chain_stats(p1, p2, gconj, v1, v2, group_of, sym, nr, nu):
        nblocks = sym.shape[0]
        nusers = p1.shape[0]
        ngroups = p1.shape[1]
        nrelay = v1.shape[0]

        sig = np.zeros(nusers)
        intf = np.zeros(nusers)
        noise = np.zeros(nusers)
        err = np.zeros(nusers, dtype=np.int64)

        t1 = np.empty(nrelay, dtype=np.complex128)
        t2 = np.empty(nrelay, dtype=np.complex128)

        for b in range(nblocks):
            for l in range(nrelay):
                a1 = 0.0 + 0.0j
                a2 = 0.0 + 0.0j
                for c in range(nrelay):
                    a1 += v1[l, c] * nr[b, c, 0] - v2[l, c] * nr[b, c, 1].conjugate()
                    a2 += v1[l, c] * nr[b, c, 1] + v2[l, c] * nr[b, c, 0].conjugate()
                t1[l] = a1
                t2[l] = a2

            for u in range(nusers):
                k = group_of[u]
                h1 = p1[u, k]
                h2 = p2[u, k]
                denom = abs(h1) ** 2 + abs(h2) ** 2

                s0k = sym[b, k, 0]
                s1k = sym[b, k, 1]
                y1s = h1 * s0k - h2 * s1k.conjugate()
                y2s = h1 * s1k + h2 * s0k.conjugate()

                y1i = 0.0 + 0.0j
                y2i = 0.0 + 0.0j
                for j in range(ngroups):
                    if j == k:
                        continue
                    y1i += p1[u, j] * sym[b, j, 0] - p2[u, j] * sym[b, j, 1].conjugate()
                    y2i += p1[u, j] * sym[b, j, 1] + p2[u, j] * sym[b, j, 0].conjugate()

                y1n = nu[b, u, 0]
                y2n = nu[b, u, 1]
                for l in range(nrelay):
                    y1n += gconj[u, l] * t1[l]
                    y2n += gconj[u, l] * t2[l]

                h1c = h1.conjugate()
                h2c = h2.conjugate()

                q = y2s.conjugate()
                zs0 = (h1c * y1s + h2 * q) / denom
                zs1 = (-h2c * y1s + h1 * q) / denom
                q = y2i.conjugate()
                zi0 = (h1c * y1i + h2 * q) / denom
                zi1 = (-h2c * y1i + h1 * q) / denom
                q = y2n.conjugate()
                zn0 = (h1c * y1n + h2 * q) / denom
                zn1 = (-h2c * y1n + h1 * q) / denom

                sig[u] += abs(zs0) ** 2 + abs(zs1) ** 2
                intf[u] += abs(zi0) ** 2 + abs(zi1) ** 2
                noise[u] += abs(zn0) ** 2 + abs(zn1) ** 2

                d0 = zs0 + zi0 + zn0
                d1 = (zs1 + zi1 + zn1).conjugate()
                if (d0.real > 0) != (s0k.real > 0):
                    err[u] += 1
                if (d0.imag > 0) != (s0k.imag > 0):
                    err[u] += 1
                if (d1.real > 0) != (s1k.real > 0):
                    err[u] += 1
                if (d1.imag > 0) != (s1k.imag > 0):
                    err[u] += 1

        return sig, intf, noise, err, 4 * nblocks


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def batch_quadform(m, wb):
    """Re(w^H M w) for each row w of ``wb`` against Hermitian ``m``."""
    m = np.ascontiguousarray(m, dtype=np.complex128)
    wb = np.ascontiguousarray(wb, dtype=np.complex128)
    if NUMBA_ENABLED:
        return _nb_batch_quadform(m, wb)
    return _np_batch_quadform(m, wb)


def quadforms_many(mats, wb):
    """(ncand, nmats) array of Re(w^H M_k w) over a stack of forms."""
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    wb = np.ascontiguousarray(wb, dtype=np.complex128)
    if NUMBA_ENABLED:
        return _nb_quadforms_many(mats, wb)
    return _np_quadforms_many(mats, wb)


def chain_stats(p1, p2, gconj, v1, v2, group_of, sym, nr, nu):
    """Accumulate genie-decomposed chain statistics over a block batch.

    Parameters are pre-scaled: ``p1[u, j] = g_u^H V1 sqrt(P_j) f_j`` and
    ``p2[u, j] = g_u^H V2 sqrt(P_j) f_j^*`` (the effective channels of
    every group at user u), ``nr``/``nu`` carry their noise standard
    deviations already.  Returns per-user sums of post-combining signal,
    interference and noise power plus hard-decision QPSK bit errors and
    the number of bits judged per user.
    """
    args = (
        np.ascontiguousarray(p1, dtype=np.complex128),
        np.ascontiguousarray(p2, dtype=np.complex128),
        np.ascontiguousarray(gconj, dtype=np.complex128),
        np.ascontiguousarray(v1, dtype=np.complex128),
        np.ascontiguousarray(v2, dtype=np.complex128),
        np.ascontiguousarray(group_of, dtype=np.int64),
        np.ascontiguousarray(sym, dtype=np.complex128),
        np.ascontiguousarray(nr, dtype=np.complex128),
        np.ascontiguousarray(nu, dtype=np.complex128),
    )
    if NUMBA_ENABLED:
        return _nb_chain_stats(*args)
    return _np_chain_stats(*args)
