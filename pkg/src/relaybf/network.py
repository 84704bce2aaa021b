"""Relay network scenarios and i.i.d. Rayleigh channel draws.

A scenario is either a *distributed* relay network (L single-antenna
relays, diagonal weights, weight dimension L) or a *MIMO* relay (one
L-antenna relay applying a full matrix, weight dimension L^2).  All powers
and noise variances are stored linear; dB conversion happens only at the
CLI/config boundary.

Randomness is counter-split: every (master seed, trial index) pair maps to
an independent stream via numpy's SeedSequence spawn keys, so sweeps are
reproducible regardless of how trials are scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matkernel import cn_matrix

ARCHITECTURES = ("distributed", "mimo")


@dataclass(frozen=True)
class PrimalUser:
    """A protected receiver: own noise power and interference ceiling."""

    noise: float
    bound: float


@dataclass(frozen=True)
class NetworkConfig:
    architecture: str
    n_relays: int
    group_sizes: tuple
    tx_powers: tuple
    relay_noise: tuple
    user_noise: tuple  # flattened over users in (group, member) order
    total_power: float | None = None
    per_relay_power: tuple = ()
    primal_users: tuple = ()

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.n_relays < 1:
            raise ValueError("need at least one relay")
        if not self.group_sizes or any(m < 1 for m in self.group_sizes):
            raise ValueError("group sizes must be positive")
        if len(self.tx_powers) != self.n_groups:
            raise ValueError("one transmit power per group required")
        if len(self.relay_noise) != self.n_relays:
            raise ValueError("one relay noise power per relay required")
        if len(self.user_noise) != self.n_users:
            raise ValueError("one user noise power per user required")
        for name, vals in (
            ("tx power", self.tx_powers),
            ("relay noise", self.relay_noise),
            ("user noise", self.user_noise),
        ):
            if any(v <= 0 for v in vals):
                raise ValueError(f"{name} entries must be > 0")
        if self.total_power is not None and self.total_power <= 0:
            raise ValueError("total power bound must be > 0")
        if self.per_relay_power and len(self.per_relay_power) != self.n_relays:
            raise ValueError("per-relay bounds must be empty or length L")
        if any(v <= 0 for v in self.per_relay_power):
            raise ValueError("per-relay bounds must be > 0")
        for pu in self.primal_users:
            if pu.noise <= 0 or pu.bound <= 0:
                raise ValueError("primal user noise and bound must be > 0")

    @property
    def n_groups(self) -> int:
        return len(self.group_sizes)

    @property
    def n_users(self) -> int:
        return sum(self.group_sizes)

    @property
    def weight_dim(self) -> int:
        """Beamformer length: L for distributed weights, L^2 for MIMO."""
        n = self.n_relays
        return n if self.architecture == "distributed" else n * n

    def user_index(self, k: int, i: int) -> int:
        return sum(self.group_sizes[:k]) + i

    def users(self):
        """Yield (flat index, group k, member i)."""
        idx = 0
        for k, mk in enumerate(self.group_sizes):
            for i in range(mk):
                yield idx, k, i
                idx += 1

    @property
    def group_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_groups), self.group_sizes)


def uniform_config(
    architecture,
    n_relays,
    n_groups,
    n_users,
    tx_power=1.0,
    relay_noise=0.25,
    user_noise=0.25,
    total_power=None,
    per_relay_power=None,
    n_primal=0,
    primal_noise=0.25,
    primal_bound=2.0,
) -> NetworkConfig:
    """Equal-group, equal-power scenario builder (the common simulation case)."""
    if n_users % n_groups:
        raise ValueError("users must split equally across groups")
    m = n_users // n_groups
    return NetworkConfig(
        architecture=architecture,
        n_relays=n_relays,
        group_sizes=(m,) * n_groups,
        tx_powers=(float(tx_power),) * n_groups,
        relay_noise=(float(relay_noise),) * n_relays,
        user_noise=(float(user_noise),) * n_users,
        total_power=None if total_power is None else float(total_power),
        per_relay_power=()
        if per_relay_power is None
        else (float(per_relay_power),) * n_relays,
        primal_users=tuple(
            PrimalUser(float(primal_noise), float(primal_bound)) for _ in range(n_primal)
        ),
    )


@dataclass(frozen=True)
class ChannelRealization:
    """One i.i.d. CN(0, 1) draw of all channels in a scenario.

    f[k]   : transmitter k -> relay array, length L
    g[u]   : relay array -> user u (flat index), length L
    q[u]   : relay array -> primal user u, length L
    """

    f: np.ndarray
    g: np.ndarray
    q: np.ndarray
    seed: int

    def g_of(self, cfg: NetworkConfig, k: int, i: int) -> np.ndarray:
        return self.g[cfg.user_index(k, i)]


def generate_channels(cfg: NetworkConfig, seed: int) -> ChannelRealization:
    """Draw every channel entry i.i.d. CN(0, 1), deterministically in ``seed``."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    f = cn_matrix(rng, (cfg.n_groups, cfg.n_relays))
    g = cn_matrix(rng, (cfg.n_users, cfg.n_relays))
    q = cn_matrix(rng, (len(cfg.primal_users), cfg.n_relays))
    return ChannelRealization(f=f, g=g, q=q, seed=seed)


def split_stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (master seed, counter key), scheduling-safe."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def derive_seed(master_seed: int, *key: int) -> int:
    """Collapse a counter-split stream into a single integer seed."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
