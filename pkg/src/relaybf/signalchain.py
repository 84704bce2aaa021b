"""Two-slot Alamouti amplify-and-forward chain and ML detection.

Protocol per code block (four symbol periods): the transmitters send their
Alamouti pair over two source slots, the relays buffer the two received
samples r(2m), r(2m+1), then forward for two slots applying the code
structure to their own input,

    slot 1:  V1 r(2m)   - V2 r(2m+1)^*
    slot 2:  V1 r(2m+1) + V2 r(2m)^*

(distributed networks: V_p = Diag(w_p)).  Each receiver then sees an
Alamouti block through the effective channels

    h1^j = g^H V1 f_j,   h2^j = g^H V2 f_j^*

plus relay noise through u1 = g^H V1, u2 = g^H V2 and its own noise, and
recovers symbols by the orthogonal combining (|h1|^2+|h2|^2)^{-1} H^H y.

The one-variable BF scheme is the special case V2 = 0: the relay forwards
V1 r(t) in every slot and the combiner degenerates to a matched filter.

Monte Carlo SINR/BER runs are genie-aided: the desired, interference and
noise components are pushed through the chain separately (the chain is
linear) so the estimator carries no cross-term variance.  The hot block
loop lives in ``kernels`` with numba and numpy backends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .matkernel import cn_matrix
from .network import ChannelRealization, NetworkConfig


class DegenerateChannelError(RuntimeError):
    """Raised when a user's effective channel pair is numerically zero."""


@dataclass(frozen=True)
class EffectiveChannels:
    """Per-group effective channels (unit transmit power) and per-antenna
    relay-noise channels seen by one user."""

    h1: np.ndarray
    h2: np.ndarray
    u1: np.ndarray
    u2: np.ndarray


def weight_matrices(cfg: NetworkConfig, w1, w2=None):
    """Relay weight matrices (V1, V2) from flat weight vectors."""
    L = cfg.n_relays
    w1 = np.asarray(w1, dtype=np.complex128)
    if cfg.architecture == "distributed":
        v1 = np.diag(w1)
        v2 = np.diag(np.asarray(w2, dtype=np.complex128)) if _present(w2) else np.zeros((L, L), dtype=np.complex128)
    else:
        v1 = w1.reshape((L, L), order="F")
        v2 = (
            np.asarray(w2, dtype=np.complex128).reshape((L, L), order="F")
            if _present(w2)
            else np.zeros((L, L), dtype=np.complex128)
        )
    return v1, v2


def _present(w) -> bool:
    return w is not None and np.size(w) > 0


def effective_channels(r: ChannelRealization, cfg: NetworkConfig, user: int, w1, w2=None) -> EffectiveChannels:
    v1, v2 = weight_matrices(cfg, w1, w2)
    gh = r.g[user].conj()
    u1 = gh @ v1
    u2 = gh @ v2
    h1 = np.array([u1 @ r.f[j] for j in range(cfg.n_groups)])
    h2 = np.array([u2 @ r.f[j].conj() for j in range(cfg.n_groups)])
    return EffectiveChannels(h1=h1, h2=h2, u1=u1, u2=u2)


def alamouti_encode(pair):
    """2x2 code block [[s0, s1], [-s1^*, s0^*]]; columns are orthogonal."""
    s0, s1 = pair
    return np.array([[s0, s1], [-np.conj(s1), np.conj(s0)]], dtype=np.complex128)


def qpsk_map(bits):
    """Gray-coded unit-power QPSK: bit0 -> real sign, bit1 -> imag sign."""
    bits = np.asarray(bits)
    return ((1.0 - 2.0 * bits[..., 0]) + 1j * (1.0 - 2.0 * bits[..., 1])) * np.sqrt(0.5)


def qpsk_slice(sym):
    """Hard decisions back to bits, inverse of qpsk_map."""
    sym = np.asarray(sym)
    return np.stack([(sym.real < 0).astype(np.int64), (sym.imag < 0).astype(np.int64)], axis=-1)


def _amp_matrix(r: ChannelRealization, cfg: NetworkConfig) -> np.ndarray:
    """(L, G): column k is sqrt(P_k) f_k, the relay-input mixing matrix."""
    sqrtp = np.sqrt(np.asarray(cfg.tx_powers, dtype=float))
    return r.f.T * sqrtp[None, :]


def _relay_sigma(cfg) -> np.ndarray:
    return np.sqrt(np.asarray(cfg.relay_noise, dtype=float))


def _user_sigma(cfg) -> np.ndarray:
    return np.sqrt(np.asarray(cfg.user_noise, dtype=float))


def simulate_block(r, cfg, w1, w2, symbols, rng, components=False):
    """One full two-slot chain pass; returns the (M, 2) received pairs.

    With ``components=True`` also returns the genie split into desired,
    interference, relay-noise and receiver-noise parts (which sum to the
    received pairs exactly).
    """
    v1, v2 = weight_matrices(cfg, w1, w2)
    fa = _amp_matrix(r, cfg)
    symbols = np.asarray(symbols, dtype=np.complex128).reshape(cfg.n_groups, 2)
    nr = cn_matrix(rng, (cfg.n_relays, 2)) * _relay_sigma(cfg)[:, None]
    nu = cn_matrix(rng, (cfg.n_users, 2)) * _user_sigma(cfg)[:, None]
    gconj = r.g.conj()

    def forward(x1, x2):
        t1 = v1 @ x1 - v2 @ np.conj(x2)
        t2 = v1 @ x2 + v2 @ np.conj(x1)
        return t1, t2

    group_of = cfg.group_of
    parts = {}
    # Desired / interference: group j's contribution to the relay input.
    per_group = np.zeros((cfg.n_groups, cfg.n_users, 2), dtype=np.complex128)
    for j in range(cfg.n_groups):
        t1, t2 = forward(fa[:, j] * symbols[j, 0], fa[:, j] * symbols[j, 1])
        per_group[j, :, 0] = gconj @ t1
        per_group[j, :, 1] = gconj @ t2
    own = per_group[group_of, np.arange(cfg.n_users)]
    parts["desired"] = own
    parts["interference"] = per_group.sum(axis=0) - own
    t1, t2 = forward(nr[:, 0], nr[:, 1])
    parts["relay_noise"] = np.stack([gconj @ t1, gconj @ t2], axis=1)
    parts["rx_noise"] = nu
    received = parts["desired"] + parts["interference"] + parts["relay_noise"] + parts["rx_noise"]
    if components:
        return received, parts
    return received


def ml_detect(y_pair, h1, h2):
    """Alamouti combining per the orthogonal detector.

    ``h1, h2`` are the target user's own effective channels including the
    transmit amplitude.  Returns soft estimates (s0_hat, s1_hat); raises
    DegenerateChannelError when |h1|^2 + |h2|^2 vanishes.
    """
    denom = abs(h1) ** 2 + abs(h2) ** 2
    if denom <= 1e-15:
        raise DegenerateChannelError("undetectable user: |h1|^2 + |h2|^2 ~ 0")
    y0, y1 = y_pair
    q = np.conj(y1)
    s0 = (np.conj(h1) * y0 + h2 * q) / denom
    s1c = (-np.conj(h2) * y0 + h1 * q) / denom
    return s0, np.conj(s1c)


def _chain_inputs(r, cfg, w1, w2):
    v1, v2 = weight_matrices(cfg, w1, w2)
    fa = _amp_matrix(r, cfg)
    gconj = r.g.conj()
    p1 = gconj @ v1 @ fa
    p2 = gconj @ v2 @ fa.conj()
    return v1, v2, gconj, p1, p2


def chain_monte_carlo(r, cfg, w1, w2, n_blocks, rng, batch=16384):
    """Genie-decomposed per-user statistics over ``n_blocks`` code blocks.

    Returns a dict with per-user arrays: signal/interference/noise mean
    powers (post-combining), the empirical SINR, and the uncoded BER.
    """
    v1, v2, gconj, p1, p2 = _chain_inputs(r, cfg, w1, w2)
    group_of = cfg.group_of.astype(np.int64)
    rs = _relay_sigma(cfg)
    us = _user_sigma(cfg)

    sig = np.zeros(cfg.n_users)
    intf = np.zeros(cfg.n_users)
    noise = np.zeros(cfg.n_users)
    err = np.zeros(cfg.n_users, dtype=np.int64)
    done = 0
    while done < n_blocks:
        b = min(batch, n_blocks - done)
        bits = rng.integers(0, 2, size=(b, cfg.n_groups, 2, 2))
        sym = qpsk_map(bits)
        nr = cn_matrix(rng, (b, cfg.n_relays, 2)) * rs[None, :, None]
        nu = cn_matrix(rng, (b, cfg.n_users, 2)) * us[None, :, None]
        s, i, n, e, _ = kernels.chain_stats(p1, p2, gconj, v1, v2, group_of, sym, nr, nu)
        sig += s
        intf += i
        noise += n
        err += e
        done += b
    scale = 2.0 * n_blocks  # two combined entries per block
    sig /= scale
    intf /= scale
    noise /= scale
    return {
        "signal": sig,
        "interference": intf,
        "noise": noise,
        "sinr": sig / (intf + noise),
        "ber": err / (4.0 * n_blocks),
    }


def empirical_sinr(r, cfg, w1, w2, n_blocks, rng, batch=16384):
    """Per-user genie SINR estimate at ``n_blocks`` Alamouti blocks."""
    return chain_monte_carlo(r, cfg, w1, w2, n_blocks, rng, batch=batch)["sinr"]


def ber_run(cfg, r, w1, w2, n_blocks, rng, batch=16384):
    """Per-user uncoded BER (gray QPSK, hard slicing) over 4*n_blocks bits."""
    return chain_monte_carlo(r, cfg, w1, w2, n_blocks, rng, batch=batch)["ber"]


def relay_power_mc(r, cfg, w1, w2, n_blocks, rng):
    """Measured relay transmit power, averaged over the full code cycle.

    One Alamouti cycle spans four symbol periods (two listening, two
    forwarding), so the cycle average is (|t1|^2 + |t2|^2) / 4 per antenna;
    this is the quantity the two-slot constraint forms bound.  Returns
    (per_antenna, total).
    """
    v1, v2 = weight_matrices(cfg, w1, w2)
    fa = _amp_matrix(r, cfg)
    rs = _relay_sigma(cfg)
    acc = np.zeros(cfg.n_relays)
    done = 0
    while done < n_blocks:
        b = min(65536, n_blocks - done)
        bits = rng.integers(0, 2, size=(b, cfg.n_groups, 2, 2))
        sym = qpsk_map(bits)
        nr = cn_matrix(rng, (b, cfg.n_relays, 2)) * rs[None, :, None]
        r1 = sym[:, :, 0] @ fa.T + nr[:, :, 0]
        r2 = sym[:, :, 1] @ fa.T + nr[:, :, 1]
        t1 = r1 @ v1.T - r2.conj() @ v2.T
        t2 = r2 @ v1.T + r1.conj() @ v2.T
        acc += (np.abs(t1) ** 2 + np.abs(t2) ** 2).sum(axis=0)
        done += b
    per_antenna = acc / (4.0 * n_blocks)
    return per_antenna, float(per_antenna.sum())


def primal_interference_mc(r, cfg, w1, w2, n_blocks, rng):
    """Measured cycle-averaged interference power at each primal user."""
    v1, v2 = weight_matrices(cfg, w1, w2)
    fa = _amp_matrix(r, cfg)
    rs = _relay_sigma(cfg)
    qconj = r.q.conj()
    acc = np.zeros(len(cfg.primal_users))
    done = 0
    while done < n_blocks:
        b = min(65536, n_blocks - done)
        bits = rng.integers(0, 2, size=(b, cfg.n_groups, 2, 2))
        sym = qpsk_map(bits)
        nr = cn_matrix(rng, (b, cfg.n_relays, 2)) * rs[None, :, None]
        r1 = sym[:, :, 0] @ fa.T + nr[:, :, 0]
        r2 = sym[:, :, 1] @ fa.T + nr[:, :, 1]
        t1 = r1 @ v1.T - r2.conj() @ v2.T
        t2 = r2 @ v1.T + r1.conj() @ v2.T
        z1 = t1 @ qconj.T
        z2 = t2 @ qconj.T
        acc += (np.abs(z1) ** 2 + np.abs(z2) ** 2).sum(axis=0)
        done += b
    return acc / (4.0 * n_blocks)
