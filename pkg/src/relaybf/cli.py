"""Command-line front end: run sweeps, bounds labs, and the selftest.

Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import harness
from .harness import ConfigError, HarnessError, ScenarioSpec, parse_scenario, run_scenario


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="relaybf",
        description="Max-min SINR relay beamforming: SDR design sweeps and tail-bound labs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="scenario file (INI syntax)")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--trials", type=int, default=None, help="override trial count")
        p.add_argument("--candidates", type=int, default=None, help="override randomization count")
        p.add_argument("--out", default="out", help="output directory (default ./out)")
        p.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
        p.add_argument("--tol-gamma", type=float, default=None, help="override bisection tolerance")

    add_common(sub.add_parser("run", help="run the scenario's sweep"))
    add_common(sub.add_parser("bounds", help="run the tail-bound lab on the scenario"))
    sub.add_parser("selftest", help="run the built-in quick checks")
    return parser


def _apply_overrides(spec: ScenarioSpec, args) -> ScenarioSpec:
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        updates["trials"] = args.trials
    if args.candidates is not None:
        if args.candidates < 1:
            raise ConfigError("--candidates must be >= 1")
        updates["candidates"] = args.candidates
    if args.tol_gamma is not None:
        if not 0 < args.tol_gamma < 1:
            raise ConfigError("--tol-gamma must lie in (0, 1)")
        updates["tol_gamma"] = args.tol_gamma
    return dataclasses.replace(spec, **updates) if updates else spec


def selftest() -> int:
    """Exercise the closed-form examples end to end; prints one line each."""
    from . import bounds, forms, matkernel, sdr, signalchain

    checks = []

    def check(name, fn):
        try:
            fn()
            checks.append((name, True, ""))
        except Exception as exc:  # noqa: BLE001 - report, don't crash
            checks.append((name, False, str(exc)))

    def _eig():
        pair = matkernel.herm_eig(np.diag([3.0, 1.0]))
        assert np.allclose(pair.eigenvalues, [3.0, 1.0])
        assert np.allclose(matkernel.psd_sqrt(np.diag([4.0, 0.0])), np.diag([2.0, 0.0]))

    def _kron():
        assert np.allclose(matkernel.kron([1, 0], [0, 1]), [0, 1, 0, 0])
        assert np.allclose(matkernel.hadamard([1, 2], [3, 4]), [3, 8])

    def _alamouti():
        blk = signalchain.alamouti_encode((1.0, 1.0j))
        assert np.allclose(blk, [[1.0, 1.0j], [1.0j, 1.0]])
        gram = blk.conj().T @ blk
        assert np.allclose(gram, 2.0 * np.eye(2), atol=1e-12)

    def _sinr():
        one = np.array([[1.0 + 0j]])
        uf = forms.UserForms(a=one, abar=one, c=one, cbar=one, user=(0, 0))
        assert abs(forms.sinr_value(uf, np.array([1.0]), None) - 0.5) < 1e-12

    def _scalar_sdr():
        one = np.array([[1.0 + 0j]])
        uf = forms.UserForms(a=one, abar=one, c=one, cbar=one, user=(0, 0))
        cf = forms.ConstraintForm(d=one, dbar=one, bound=2.0, label="total")
        sol = sdr.solve_r2sdr([uf], [cf])
        assert abs(sol.gamma_star - 2.0 / 3.0) < 1e-3

    def _tails():
        assert abs(bounds.tail2_closed_form(1.0) - (1.0 - 2.0 / np.e)) < 1e-12
        assert abs(bounds.lemma1_bound(0.1, 0.5) - 0.5) < 1e-12

    check("hermitian eig / psd sqrt", _eig)
    check("kron / hadamard", _kron)
    check("alamouti orthogonality", _alamouti)
    check("scalar SINR form", _sinr)
    check("scalar max-min SDR = 2/3", _scalar_sdr)
    check("gaussian tail identities", _tails)

    ok = True
    for name, passed, msg in checks:
        print(f"[{'PASS' if passed else 'FAIL'}] {name}" + (f": {msg}" if msg else ""))
        ok = ok and passed
    return 0 if ok else 2


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0

    if args.command == "selftest":
        return selftest()

    try:
        spec = parse_scenario(args.config)
        spec = _apply_overrides(spec, args)
        if args.command == "bounds":
            spec = dataclasses.replace(spec, sweep_kind="bounds_lab", sweep_values=())
        result = run_scenario(spec, args.out, threads=max(1, args.threads))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (HarnessError, harness.SdrError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    for path in result["csv"] + result["svg"]:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
