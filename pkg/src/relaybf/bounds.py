"""Monte Carlo verification of the randomization tail bounds.

The approximation analysis controls two events over the rounding
distribution xi ~ CN(0, X1*), eta ~ CN(0, X2*):

* the SINR of a drawn pair falling below a fraction rho of its
  relaxation-mean value (worst-user analysis), bounded by

      min{ (4 rho / (w - 2 rho))^2  [valid for rho < w/2],
            4 rho / (1 - 2 rho) }            clamped to 1,

  where w = min{A.X1, Abar.X2} / (A.X1 + Abar.X2) in [0, 1/2]; the
  degenerate w = 0 case admits the tighter 2 rho / (1 - rho);

* a power form exceeding v times its mean, for which only the provable
  Markov ceiling 1/v is asserted here (the literature bound's constant is
  not reconstructed).

Closed Gaussian tails used by the proofs are exposed exactly:
P(|x|^2 <= t) = 1 - e^-t <= t and
P(|x|^2 + |y|^2 <= t) = 1 - (1+t) e^-t <= t^2/2.

All empirical estimates carry binomial 3-sigma half-widths so the
assertions have a bounded flake rate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .matkernel import cn_matrix, psd_sqrt


@dataclass
class TailReport:
    """Empirical tail probabilities vs analytic bounds over a grid."""

    grid: np.ndarray
    empirical: np.ndarray
    ci_halfwidth: np.ndarray
    analytic: np.ndarray
    n_samples: int
    omega: float = None  # set for the SINR-event report only

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["grid_value", "empirical", "ci_halfwidth", "analytic_bound"])
            for g, e, c, a in zip(self.grid, self.empirical, self.ci_halfwidth, self.analytic):
                writer.writerow([f"{g:.10g}", f"{e:.10g}", f"{c:.10g}", f"{a:.10g}"])
        return path

    def violations(self) -> int:
        """Grid points where the empirical tail exceeds bound + CI slack."""
        return int(np.sum(self.empirical > self.analytic + self.ci_halfwidth))


def omega(x1, x2, a, abar) -> float:
    """Numerator balance min{A.X1, Abar.X2} / (A.X1 + Abar.X2), in [0, 1/2]."""
    na = float(np.vdot(a, x1).real)
    nb = float(np.vdot(abar, x2).real)
    total = na + nb
    if total <= 0.0:
        raise ValueError("degenerate solution: zero numerator mass")
    return float(np.clip(min(na, nb) / total, 0.0, 0.5))


def lemma1_bound(rho: float, omega_val: float) -> float:
    """Worst-user tail ceiling at fraction rho, clamped to 1."""
    if not 0.0 < rho < 0.5:
        raise ValueError("rho must lie in (0, 1/2)")
    if not 0.0 <= omega_val <= 0.5:
        raise ValueError("omega must lie in [0, 1/2]")
    val = 4.0 * rho / (1.0 - 2.0 * rho)
    if rho < omega_val / 2.0:
        val = min(val, (4.0 * rho / (omega_val - 2.0 * rho)) ** 2)
    return min(val, 1.0)


def gamma2_bound(rho: float) -> float:
    """Tighter ceiling 2 rho / (1 - rho) for the degenerate omega = 0 case."""
    if not 0.0 < rho < 0.5:
        raise ValueError("rho must lie in (0, 1/2)")
    return min(2.0 * rho / (1.0 - rho), 1.0)


def tail1_closed_form(t):
    """P(|x|^2 <= t) for standard complex normal x: 1 - e^-t (<= t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    return 1.0 - np.exp(-t)


def tail2_closed_form(t):
    """P(|x|^2 + |y|^2 <= t): 1 - (1+t) e^-t (<= t^2/2)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    return 1.0 - (1.0 + t) * np.exp(-t)


def _ci_halfwidth(phat, n):
    return 3.0 * np.sqrt(phat * (1.0 - phat) / n) + 3.0 / n


def _draw(sqrt_cov, rng, count):
    return cn_matrix(rng, (count, sqrt_cov.shape[0])) @ sqrt_cov.T


def lemma1_empirical(x1, x2, uf, rho_grid, n_samples, rng, batch=65536) -> TailReport:
    """Empirical SINR-event tails against the analytic ceiling.

    The sampling uses the simplification xi ~ CN(0, X1) directly: the
    unitary factors in the proof's construction act on an isotropic
    Gaussian and cancel in distribution.
    """
    if n_samples < 10_000:
        raise ValueError("need at least 1e4 samples for a meaningful tail")
    rho_grid = np.sort(np.asarray(rho_grid, dtype=float))
    s1 = psd_sqrt(x1)
    s2 = psd_sqrt(x2)
    na = float(np.vdot(uf.a, x1).real) + float(np.vdot(uf.abar, x2).real)
    nc = float(np.vdot(uf.c, x1).real) + float(np.vdot(uf.cbar, x2).real)
    base = na / (nc + 1.0)
    w = omega(x1, x2, uf.a, uf.abar)

    mats1 = np.stack([uf.a, uf.c])
    mats2 = np.stack([uf.abar, uf.cbar])
    counts = np.zeros(rho_grid.size, dtype=np.int64)
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        xi = _draw(s1, rng, b)
        eta = _draw(s2, rng, b)
        q1 = kernels.quadforms_many(mats1, xi)
        q2 = kernels.quadforms_many(mats2, eta)
        ratio = (q1[:, 0] + q2[:, 0]) / (q1[:, 1] + q2[:, 1] + 1.0)
        counts += (ratio[:, None] <= rho_grid[None, :] * base).sum(axis=0)
        done += b
    emp = counts / n_samples
    analytic = np.array([lemma1_bound(r, w) for r in rho_grid])
    return TailReport(
        grid=rho_grid,
        empirical=emp,
        ci_halfwidth=_ci_halfwidth(emp, n_samples),
        analytic=analytic,
        n_samples=n_samples,
        omega=w,
    )


def lemma2_empirical(x1, x2, cf, v_grid, n_samples, rng, batch=65536) -> TailReport:
    """Empirical power-overshoot tails against the Markov ceiling 1/v."""
    v_grid = np.sort(np.asarray(v_grid, dtype=float))
    if np.any(v_grid < 2.0):
        raise ValueError("the analysis covers v >= 2 only")
    mean_ref = float(np.vdot(cf.d, x1).real) + float(np.vdot(cf.dbar, x2).real)
    if mean_ref <= 0.0:
        raise ValueError("degenerate constraint: zero mean power")
    s1 = psd_sqrt(x1)
    s2 = psd_sqrt(x2)
    mats1 = cf.d[None]
    mats2 = cf.dbar[None]
    counts = np.zeros(v_grid.size, dtype=np.int64)
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        xi = _draw(s1, rng, b)
        eta = _draw(s2, rng, b)
        val = kernels.quadforms_many(mats1, xi)[:, 0] + kernels.quadforms_many(mats2, eta)[:, 0]
        counts += (val[:, None] >= v_grid[None, :] * mean_ref).sum(axis=0)
        done += b
    emp = counts / n_samples
    return TailReport(
        grid=v_grid,
        empirical=emp,
        ci_halfwidth=_ci_halfwidth(emp, n_samples),
        analytic=1.0 / v_grid,
        n_samples=n_samples,
    )
