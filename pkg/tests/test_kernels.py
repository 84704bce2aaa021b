import numpy as np
import pytest

from relaybf import kernels
from relaybf.matkernel import cn_matrix
from _oracles import rand_herm


def _quadform_loop(m, wb):
    out = np.empty(wb.shape[0])
    for c in range(wb.shape[0]):
        out[c] = np.vdot(wb[c], m @ wb[c]).real
    return out


def test_batch_quadform_matches_loop():
    rng = np.random.default_rng(0)
    m = rand_herm(rng, 6, psd=True)
    wb = cn_matrix(rng, (64, 6))
    assert np.allclose(kernels.batch_quadform(m, wb), _quadform_loop(m, wb), rtol=1e-12)


def test_quadforms_many_matches_loop():
    rng = np.random.default_rng(1)
    mats = np.stack([rand_herm(rng, 5) for _ in range(7)])
    wb = cn_matrix(rng, (33, 5))
    got = kernels.quadforms_many(mats, wb)
    for k in range(7):
        assert np.allclose(got[:, k], _quadform_loop(mats[k], wb), rtol=1e-12)


def _chain_args(rng, nblocks=500, L=4, G=2, M=8):
    p1 = cn_matrix(rng, (M, G))
    p2 = cn_matrix(rng, (M, G))
    gconj = cn_matrix(rng, (M, L))
    v1 = cn_matrix(rng, (L, L))
    v2 = cn_matrix(rng, (L, L))
    group_of = np.repeat(np.arange(G), M // G).astype(np.int64)
    bits = rng.integers(0, 2, size=(nblocks, G, 2, 2))
    sym = ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) * np.sqrt(0.5)
    nr = cn_matrix(rng, (nblocks, L, 2)) * 0.5
    nu = cn_matrix(rng, (nblocks, M, 2)) * 0.5
    return (p1, p2, gconj, v1, v2, group_of, sym, nr, nu)


@pytest.mark.skipif(not kernels.NUMBA_ENABLED, reason="numba backend disabled")
def test_backends_agree():
    rng = np.random.default_rng(2)
    args = _chain_args(rng)
    out_np = kernels._np_chain_stats(*args)
    out_nb = kernels._nb_chain_stats(*args)
    for a, b in zip(out_np[:3], out_nb[:3]):
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12)
    assert np.array_equal(out_np[3], out_nb[3])  # bit errors are integers
    assert out_np[4] == out_nb[4]


def test_chain_stats_against_blockwise_reference():
    """The batched kernel must reproduce a plain per-block simulation."""
    rng = np.random.default_rng(3)
    p1, p2, gconj, v1, v2, group_of, sym, nr, nu = _chain_args(rng, nblocks=200, M=4)
    M, G = p1.shape
    sig = np.zeros(M)
    intf = np.zeros(M)
    noise = np.zeros(M)
    err = np.zeros(M, dtype=np.int64)
    for b in range(sym.shape[0]):
        t1 = v1 @ nr[b, :, 0] - v2 @ np.conj(nr[b, :, 1])
        t2 = v1 @ nr[b, :, 1] + v2 @ np.conj(nr[b, :, 0])
        for u in range(M):
            k = group_of[u]
            h1, h2 = p1[u, k], p2[u, k]
            den = abs(h1) ** 2 + abs(h2) ** 2
            comps = []
            for which in ("sig", "intf", "noise"):
                if which == "sig":
                    y1 = h1 * sym[b, k, 0] - h2 * np.conj(sym[b, k, 1])
                    y2 = h1 * sym[b, k, 1] + h2 * np.conj(sym[b, k, 0])
                elif which == "intf":
                    y1 = sum(
                        p1[u, j] * sym[b, j, 0] - p2[u, j] * np.conj(sym[b, j, 1])
                        for j in range(G) if j != k
                    )
                    y2 = sum(
                        p1[u, j] * sym[b, j, 1] + p2[u, j] * np.conj(sym[b, j, 0])
                        for j in range(G) if j != k
                    )
                else:
                    y1 = gconj[u] @ t1 + nu[b, u, 0]
                    y2 = gconj[u] @ t2 + nu[b, u, 1]
                z0 = (np.conj(h1) * y1 + h2 * np.conj(y2)) / den
                z1 = (-np.conj(h2) * y1 + h1 * np.conj(y2)) / den
                comps.append((z0, z1))
            sig[u] += abs(comps[0][0]) ** 2 + abs(comps[0][1]) ** 2
            intf[u] += abs(comps[1][0]) ** 2 + abs(comps[1][1]) ** 2
            noise[u] += abs(comps[2][0]) ** 2 + abs(comps[2][1]) ** 2
            d0 = comps[0][0] + comps[1][0] + comps[2][0]
            d1 = np.conj(comps[0][1] + comps[1][1] + comps[2][1])
            err[u] += (d0.real > 0) != (sym[b, k, 0].real > 0)
            err[u] += (d0.imag > 0) != (sym[b, k, 0].imag > 0)
            err[u] += (d1.real > 0) != (sym[b, k, 1].real > 0)
            err[u] += (d1.imag > 0) != (sym[b, k, 1].imag > 0)

    got = kernels.chain_stats(p1, p2, gconj, v1, v2, group_of, sym, nr, nu)
    assert np.allclose(got[0], sig, rtol=1e-10)
    assert np.allclose(got[1], intf, rtol=1e-10)
    assert np.allclose(got[2], noise, rtol=1e-10)
    assert np.array_equal(got[3], err)
