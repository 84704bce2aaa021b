"""SINR and power quadratic forms for both relay architectures.

For user (k, i) with channel g and weight vectors w1 = vec(V1),
w2 = vec(V2) the post-combining SINR is

    (w1^H A w1 + w2^H Abar w2) / (w1^H C w1 + w2^H Cbar w2 + 1)

with rank-1 numerator forms built on the steering vectors

    MIMO:        a1_m = conj(f_m) kron g,   a2_m = f_m kron g
    distributed: a1_m = conj(f_m) *    g,   a2_m = f_m *    g

A = P_k a1_k a1_k^H / s2,  C = sum_{m != k} P_m a1_m a1_m^H / s2 + N / s2,
and the barred pair uses a2; s2 is the user's own noise power.  N is the
relay-noise form (Sigma kron g g^H for MIMO, Diag(sigma_l^2 |g_l|^2)
distributed) and appears in BOTH C and Cbar: the noise picked up at the
relays rides slot 1 through V1 and slot 2 through V2 symmetrically.

Power constraints are stated per two-slot code block, halved so that a
weight pair (w, w) spends exactly what w spends in the one-variable
problem; the one-variable (BF) scheme uses the un-halved slot-1 matrix.
Equivalently, the halved forms equal the relay's radiated power averaged
over the full half-duplex cycle (two listening slots, two forwarding
slots), which is what the Monte Carlo power oracle measures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matkernel import hermitize, outer
from .network import ChannelRealization, NetworkConfig


@dataclass(frozen=True)
class UserForms:
    """Hermitian PSD quadruple defining one user's SINR in (w1, w2)."""

    a: np.ndarray
    abar: np.ndarray
    c: np.ndarray
    cbar: np.ndarray
    user: tuple  # (k, i)

    @property
    def group(self) -> int:
        return self.user[0]


@dataclass(frozen=True)
class ConstraintForm:
    """One power/interference cap: w1^H D w1 + w2^H Dbar w2 <= bound."""

    d: np.ndarray
    dbar: np.ndarray
    bound: float
    label: str


def _steering(cfg: NetworkConfig, f_m: np.ndarray, g: np.ndarray):
    if cfg.architecture == "mimo":
        return np.kron(f_m.conj(), g), np.kron(f_m, g)
    return f_m.conj() * g, f_m * g


def _relay_noise_form(cfg: NetworkConfig, g: np.ndarray) -> np.ndarray:
    sig = np.asarray(cfg.relay_noise, dtype=float)
    if cfg.architecture == "mimo":
        return np.kron(np.diag(sig), outer(g))
    return np.diag(sig * np.abs(g) ** 2).astype(np.complex128)


def build_user_forms(r: ChannelRealization, cfg: NetworkConfig):
    """SINR forms for every user, normalized by that user's noise power."""
    out = []
    for idx, k, i in cfg.users():
        g = r.g[idx]
        s2 = cfg.user_noise[idx]
        noise_form = _relay_noise_form(cfg, g) / s2
        c = noise_form.copy()
        cbar = noise_form.copy()
        a = abar = None
        for m in range(cfg.n_groups):
            v1, v2 = _steering(cfg, r.f[m], g)
            m1 = cfg.tx_powers[m] * outer(v1) / s2
            m2 = cfg.tx_powers[m] * outer(v2) / s2
            if m == k:
                a, abar = m1, m2
            else:
                c = c + m1
                cbar = cbar + m2
        out.append(
            UserForms(
                a=hermitize(a),
                abar=hermitize(abar),
                c=hermitize(c),
                cbar=hermitize(cbar),
                user=(k, i),
            )
        )
    return out


def relay_input_covariance(r: ChannelRealization, cfg: NetworkConfig) -> np.ndarray:
    """Covariance of one relay-array input sample: sum_k P_k f_k f_k^H + Sigma."""
    cov = np.diag(np.asarray(cfg.relay_noise, dtype=float)).astype(np.complex128)
    for k in range(cfg.n_groups):
        cov = cov + cfg.tx_powers[k] * outer(r.f[k])
    return hermitize(cov)


def _per_antenna_pair(cfg, rcov, ell):
    n = cfg.n_relays
    basis = np.zeros((n, n), dtype=np.complex128)
    basis[ell, ell] = 1.0
    if cfg.architecture == "mimo":
        return 0.5 * np.kron(rcov.T, basis), 0.5 * np.kron(rcov, basis)
    rho = float(rcov[ell, ell].real)
    d = 0.5 * rho * basis
    return d, d.copy()


def _primal_pair(cfg, r, u):
    q = r.q[u]
    noise = _relay_noise_form(cfg, q)
    d = noise.copy()
    dbar = noise.copy()
    for k in range(cfg.n_groups):
        v1, v2 = _steering(cfg, r.f[k], q)
        d = d + cfg.tx_powers[k] * outer(v1)
        dbar = dbar + cfg.tx_powers[k] * outer(v2)
    return 0.5 * hermitize(d), 0.5 * hermitize(dbar)


def build_constraints(r: ChannelRealization, cfg: NetworkConfig):
    """All enabled power/interference constraints as (D, Dbar, bound) triples."""
    rcov = relay_input_covariance(r, cfg)
    cons = []
    pairs = [_per_antenna_pair(cfg, rcov, ell) for ell in range(cfg.n_relays)]
    if cfg.total_power is not None:
        d = hermitize(sum(p[0] for p in pairs))
        dbar = hermitize(sum(p[1] for p in pairs))
        cons.append(ConstraintForm(d, dbar, float(cfg.total_power), "total"))
    for ell, bound in enumerate(cfg.per_relay_power):
        d, dbar = pairs[ell]
        cons.append(ConstraintForm(hermitize(d), hermitize(dbar), float(bound), f"relay{ell}"))
    for u, pu in enumerate(cfg.primal_users):
        d, dbar = _primal_pair(cfg, r, u)
        cons.append(ConstraintForm(d, dbar, float(pu.bound), f"primal{u}"))
    if not cons:
        raise ValueError("no constraint enabled: the design problem is unbounded")
    return cons


def bf_power_form(cf: ConstraintForm) -> np.ndarray:
    """Slot-1 constraint matrix at full weight, for the one-variable scheme."""
    return 2.0 * cf.d


def quad(m: np.ndarray, w: np.ndarray) -> float:
    """Re(w^H M w), clamped at zero from below for PSD forms."""
    val = float(np.vdot(w, m @ w).real)
    return val


def sinr_value(uf: UserForms, w1, w2=None) -> float:
    """SINR of a weight pair; pass w2=None (or empty) for the BF scheme."""
    w1 = np.asarray(w1, dtype=np.complex128)
    num = max(quad(uf.a, w1), 0.0)
    den = max(quad(uf.c, w1), 0.0)
    if w2 is not None and np.size(w2):
        w2 = np.asarray(w2, dtype=np.complex128)
        num += max(quad(uf.abar, w2), 0.0)
        den += max(quad(uf.cbar, w2), 0.0)
    return num / (den + 1.0)
