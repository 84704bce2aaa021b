import numpy as np
import pytest

from relaybf import forms, network
from relaybf.signalchain import primal_interference_mc, relay_power_mc


def scalar_instance():
    """L=1, G=1, M=1, unit channels/powers/noises (distributed)."""
    cfg = network.uniform_config(
        "distributed", 1, 1, 1, tx_power=1.0, relay_noise=1.0, user_noise=1.0, total_power=2.0
    )
    r = network.ChannelRealization(
        f=np.ones((1, 1), dtype=complex),
        g=np.ones((1, 1), dtype=complex),
        q=np.zeros((0, 1), dtype=complex),
        seed=0,
    )
    return cfg, r


def test_scalar_forms():
    cfg, r = scalar_instance()
    (uf,) = forms.build_user_forms(r, cfg)
    for m in (uf.a, uf.abar, uf.c, uf.cbar):
        assert np.allclose(m, [[1.0]])
    (cf,) = forms.build_constraints(r, cfg)
    assert np.allclose(cf.d, [[1.0]])
    assert np.allclose(cf.dbar, [[1.0]])
    assert cf.bound == 2.0
    assert cf.label == "total"


def test_scalar_sinr_values():
    cfg, r = scalar_instance()
    (uf,) = forms.build_user_forms(r, cfg)
    assert abs(forms.sinr_value(uf, [1.0], None) - 0.5) < 1e-12
    e1 = np.zeros((4, 4))
    e1[0, 0] = 1.0
    uf2 = forms.UserForms(a=e1, abar=e1, c=np.zeros((4, 4)), cbar=np.zeros((4, 4)), user=(0, 0))
    w = np.zeros(4)
    w[0] = 1.0
    assert abs(forms.sinr_value(uf2, w, np.zeros(4)) - 1.0) < 1e-12


def test_sinr_scaling_monotone():
    cfg = network.uniform_config("distributed", 3, 2, 4, total_power=3.0)
    r = network.generate_channels(cfg, 21)
    users = forms.build_user_forms(r, cfg)
    rng = np.random.default_rng(0)
    w1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    w2 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    vals = [forms.sinr_value(users[0], c * w1, c * w2) for c in (0.5, 1.0, 2.0)]
    assert vals[0] < vals[1] < vals[2]


@pytest.mark.parametrize("arch", ["distributed", "mimo"])
def test_rank_one_and_psd_invariants(arch):
    cfg = network.uniform_config(arch, 3, 2, 4, total_power=2.0, n_primal=1, primal_bound=1.0)
    r = network.generate_channels(cfg, 5)
    for uf in forms.build_user_forms(r, cfg):
        for m in (uf.a, uf.abar, uf.c, uf.cbar):
            assert np.abs(m - m.conj().T).max() < 1e-12 * max(1.0, np.abs(m).max())
            assert np.linalg.eigvalsh(m).min() > -1e-9 * max(np.linalg.eigvalsh(m).max(), 1e-30)
        ea = np.linalg.eigvalsh(uf.a)
        assert ea[-2] <= 1e-9 * ea[-1]
        eb = np.linalg.eigvalsh(uf.abar)
        assert eb[-2] <= 1e-9 * eb[-1]
    for cf in forms.build_constraints(r, cfg):
        assert np.linalg.eigvalsh(cf.d).min() > -1e-9 * max(np.linalg.eigvalsh(cf.d).max(), 1e-30)
        assert cf.bound > 0


def test_mimo_rank_one_eigenvalue():
    cfg = network.uniform_config("mimo", 2, 2, 2, tx_power=2.0, user_noise=0.5, total_power=1.0)
    r = network.generate_channels(cfg, 3)
    users = forms.build_user_forms(r, cfg)
    uf = users[0]
    assert uf.a.shape == (4, 4)
    expected = (
        cfg.tx_powers[0]
        * np.linalg.norm(r.f[0]) ** 2
        * np.linalg.norm(r.g[0]) ** 2
        / cfg.user_noise[0]
    )
    assert abs(np.linalg.eigvalsh(uf.a)[-1] - expected) < 1e-9 * expected


def test_distributed_slot_coupling_symmetry():
    """The barred forms equal the unbarred forms at conjugated transmit
    channels: only f flips between the slots, never g."""
    cfg = network.uniform_config("distributed", 4, 2, 4, total_power=1.0)
    r = network.generate_channels(cfg, 13)
    r_conj = network.ChannelRealization(f=r.f.conj(), g=r.g, q=r.q, seed=r.seed)
    built = forms.build_user_forms(r, cfg)
    built_conj = forms.build_user_forms(r_conj, cfg)
    for uf, uf_c in zip(built, built_conj):
        scale = np.abs(uf.abar).max()
        assert np.abs(uf.abar - uf_c.a).max() < 1e-12 * scale
        assert np.abs(uf.cbar - uf_c.c).max() < 1e-12 * max(np.abs(uf.cbar).max(), 1e-30)


def test_primal_zero_channel_gives_zero_form():
    cfg = network.uniform_config("mimo", 2, 1, 1, total_power=1.0, n_primal=1, primal_bound=1.0)
    r = network.generate_channels(cfg, 1)
    r = network.ChannelRealization(f=r.f, g=r.g, q=np.zeros_like(r.q), seed=r.seed)
    cons = forms.build_constraints(r, cfg)
    primal = [c for c in cons if c.label == "primal0"][0]
    assert np.abs(primal.d).max() == 0.0
    assert np.abs(primal.dbar).max() == 0.0


def test_no_constraints_rejected():
    cfg = network.uniform_config("distributed", 2, 1, 1)
    r = network.generate_channels(cfg, 2)
    with pytest.raises(ValueError):
        forms.build_constraints(r, cfg)


@pytest.mark.parametrize("arch", ["mimo", "distributed"])
def test_constraint_forms_match_measured_power(arch):
    """Algebraic w^H (D + Dbar) w at w1=w2=w equals the Monte Carlo
    cycle-averaged relay transmit power (the oracle standing in for the
    constraint equations)."""
    cfg = network.uniform_config(
        arch, 3, 2, 4, tx_power=1.5, relay_noise=0.3, user_noise=0.25,
        total_power=5.0, per_relay_power=2.0,
    )
    r = network.generate_channels(cfg, 17)
    cons = forms.build_constraints(r, cfg)
    rng = np.random.default_rng(99)
    n = cfg.weight_dim
    w = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * 0.4

    per_ant, total = relay_power_mc(r, cfg, w, w, 100_000, np.random.default_rng(5))
    for cf in cons:
        alg = float(np.vdot(w, cf.d @ w).real + np.vdot(w, cf.dbar @ w).real)
        if cf.label == "total":
            meas = total
        elif cf.label.startswith("relay"):
            meas = per_ant[int(cf.label[5:])]
        else:
            continue
        assert abs(meas - alg) < 0.03 * alg, (cf.label, meas, alg)


def test_primal_form_matches_measured_interference():
    cfg = network.uniform_config(
        "mimo", 3, 2, 4, total_power=5.0, n_primal=2, primal_bound=1.0
    )
    r = network.generate_channels(cfg, 23)
    cons = [c for c in forms.build_constraints(r, cfg) if c.label.startswith("primal")]
    rng = np.random.default_rng(1)
    n = cfg.weight_dim
    w1 = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * 0.3
    w2 = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * 0.3
    meas = primal_interference_mc(r, cfg, w1, w2, 100_000, np.random.default_rng(2))
    for u, cf in enumerate(cons):
        alg = float(np.vdot(w1, cf.d @ w1).real + np.vdot(w2, cf.dbar @ w2).real)
        assert abs(meas[u] - alg) < 0.03 * alg


def test_bf_power_form_is_unhalved_slot_one():
    cfg = network.uniform_config("mimo", 2, 1, 2, total_power=4.0)
    r = network.generate_channels(cfg, 31)
    (cf,) = forms.build_constraints(r, cfg)
    assert np.allclose(forms.bf_power_form(cf), 2.0 * cf.d)
