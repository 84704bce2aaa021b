"""Dense primal-dual interior-point solver for small complex Hermitian SDPs.

Solves problems with up to two Hermitian PSD blocks plus an internal
nonnegative slack block, in the standard pair

    (P) min sum_B C_B . X_B + c^T s    (D) max b^T y
        s.t. A_i . X + a_i^T s = b_i        s.t. C_B - sum_i y_i A_iB >= 0
             X_B >= 0, s >= 0                    c - A^T y >= 0

where ``.`` is the real Frobenius inner product Re tr(M^H N).  Complex
Hermitian blocks are handled natively (no 2n real embedding).  The method
is an infeasible-start Mehrotra predictor-corrector with the HKM direction
(the "XZ" linearization with Hermitian symmetrization of the primal step),
which is ample for the dimensions here (n <= ~20, a few dozen constraints).

The public surface solves max-form problems over (X1, X2) with <=, >=, ==
rows; inequality slacks are added internally.  Infeasible problems are
classified by a phase-1 pass that minimizes a single relaxation slack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matkernel import hermitize, require_hermitian

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 200

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_MAX_ITER = "max_iter"
STATUS_NUMERICAL = "numerical_failure"

SENSES = ("<=", ">=", "==")


@dataclass(frozen=True)
class SdpConstraint:
    fa: np.ndarray
    fb: np.ndarray
    rhs: float
    sense: str = "<="


@dataclass(frozen=True)
class SdpProblem:
    """Maximize F0a . X1 + F0b . X2 subject to linear trace constraints."""

    block_dims: tuple
    objective: tuple  # (F0a, F0b)
    constraints: list

    def validated(self) -> "SdpProblem":
        n1, n2 = self.block_dims
        f0a = _check_block(self.objective[0], n1, "objective block 1")
        f0b = _check_block(self.objective[1], n2, "objective block 2")
        cons = []
        for j, con in enumerate(self.constraints):
            if con.sense not in SENSES:
                raise ValueError(f"constraint {j}: unknown sense {con.sense!r}")
            cons.append(
                SdpConstraint(
                    fa=_check_block(con.fa, n1, f"constraint {j} block 1"),
                    fb=_check_block(con.fb, n2, f"constraint {j} block 2"),
                    rhs=float(con.rhs),
                    sense=con.sense,
                )
            )
        return SdpProblem((n1, n2), (f0a, f0b), cons)


def _check_block(m, n, name):
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if m is None:
        return np.zeros((n, n), dtype=np.complex128)
    m = require_hermitian(m, name=name)
    if m.shape[0] != n:
        raise ValueError(f"{name}: expected dimension {n}, got {m.shape[0]}")
    return m


@dataclass
class SdpResult:
    status: str
    x1: np.ndarray
    x2: np.ndarray
    objective: float
    gap: float
    iterations: int
    y: np.ndarray = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# core iteration on (PSD blocks, LP block)
# ---------------------------------------------------------------------------


def _ip(a, b) -> float:
    return float(np.vdot(a, b).real)


def _max_step(x, dx):
    """Largest alpha with x + alpha dx staying PD (1 block), or inf.

    A zero step is returned when x itself has drifted out of the cone
    beyond repair; the caller's stall detection turns that into an honest
    numerical-failure status.
    """
    scale = max(abs(float(np.trace(x).real)) / max(x.shape[0], 1), 1e-300)
    chol = None
    for jit in (0.0, 1e-13, 1e-9, 1e-6):
        try:
            chol = np.linalg.cholesky(x + (jit * scale) * np.eye(x.shape[0]))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        return 0.0
    t = np.linalg.solve(chol, dx)
    m = np.linalg.solve(chol, t.conj().T)
    lam = float(np.linalg.eigvalsh(hermitize(m)).min())
    if lam >= 0.0:
        return np.inf
    return 1.0 / (-lam)


def _max_step_lp(s, ds):
    neg = ds < 0
    if not np.any(neg):
        return np.inf
    return float((-s[neg] / ds[neg]).min())


class CoreProblem:
    """min sum_B C_B.X_B + c^T s  s.t.  sum_B A_B[i].X_B + a_lp[i].s = b."""

    def __init__(self, blocks_c, blocks_a, c_lp, a_lp, b):
        self.blocks_c = [np.asarray(c, dtype=np.complex128) for c in blocks_c]
        self.blocks_a = [np.asarray(a, dtype=np.complex128) for a in blocks_a]
        self.c_lp = np.asarray(c_lp, dtype=float)
        self.a_lp = np.asarray(a_lp, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.m = self.b.size
        self.dims = [c.shape[0] for c in self.blocks_c]
        self.p = self.c_lp.size
        self.nu = sum(self.dims) + self.p
        if self.nu == 0:
            raise ValueError("empty problem")
        for a, n in zip(self.blocks_a, self.dims):
            if a.shape != (self.m, n, n):
                raise ValueError("constraint stack shape mismatch")
        if self.a_lp.shape != (self.m, self.p):
            raise ValueError("lp stack shape mismatch")

    def apply(self, xs, s):
        out = np.zeros(self.m)
        for a, x in zip(self.blocks_a, xs):
            if x.size:
                out += np.einsum("ikl,kl->i", a.conj(), x).real
        if self.p:
            out += self.a_lp @ s
        return out


def solve_core(core: CoreProblem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Run the predictor-corrector loop; returns a result dict."""
    m, p = core.m, core.p
    feas_tol = max(min(tol, 1e-8), 1e-9)

    norm_a = max(
        [1.0]
        + [float(np.abs(a).max()) for a in core.blocks_a if a.size]
        + ([float(np.abs(core.a_lp).max())] if p else [])
    )
    norm_b = max(1.0, float(np.abs(core.b).max()) if m else 1.0)
    norm_c = max(
        [1.0]
        + [float(np.abs(c).max()) for c in core.blocks_c if c.size]
        + ([float(np.abs(core.c_lp).max())] if p else [])
    )
    rho_p = 10.0 * max(1.0, norm_b / norm_a)
    rho_d = 10.0 * max(1.0, norm_a, norm_c)

    xs = [rho_p * np.eye(n, dtype=np.complex128) for n in core.dims]
    zs = [rho_d * np.eye(n, dtype=np.complex128) for n in core.dims]
    s = np.full(p, rho_p)
    z = np.full(p, rho_d)
    y = np.zeros(m)

    best = None
    status = STATUS_MAX_ITER
    iters = 0
    stalls = 0

    for iters in range(1, max_iter + 1):
        rp = core.b - core.apply(xs, s)
        rds = [
            c - np.tensordot(y, a, axes=1) - zb if c.size else c
            for c, a, zb in zip(core.blocks_c, core.blocks_a, zs)
        ]
        rd_lp = core.c_lp - core.a_lp.T @ y - z if p else np.zeros(0)

        gap = sum(_ip(x, zb) for x, zb in zip(xs, zs)) + float(s @ z)
        mu = gap / core.nu
        pobj = sum(_ip(c, x) for c, x in zip(core.blocks_c, xs)) + float(core.c_lp @ s)
        dobj = float(core.b @ y)
        if not (np.isfinite(gap) and np.isfinite(pobj) and np.isfinite(dobj)):
            status = STATUS_NUMERICAL
            break
        if max(abs(pobj), abs(dobj)) > 1e14 or gap > 1e16:
            # Diverging iterates: primal or dual infeasibility in disguise.
            status = STATUS_NUMERICAL
            break
        rel_gap = abs(pobj - dobj) / (1.0 + max(abs(pobj), abs(dobj)))
        perr = float(np.linalg.norm(rp)) / (1.0 + float(np.linalg.norm(core.b)))
        derr_sq = sum(float(np.linalg.norm(r)) ** 2 for r in rds if r.size)
        derr_sq += float(np.linalg.norm(rd_lp)) ** 2 if p else 0.0
        derr = np.sqrt(derr_sq) / (1.0 + norm_c)

        snapshot = {
            "xs": [x.copy() for x in xs],
            "s": s.copy(),
            "y": y.copy(),
            "zs": [zb.copy() for zb in zs],
            "z": z.copy(),
            "pobj": pobj,
            "dobj": dobj,
            "rel_gap": rel_gap,
            "perr": perr,
            "derr": derr,
            "iterations": iters - 1,
        }
        if best is None or max(rel_gap, perr, derr) < max(
            best["rel_gap"], best["perr"], best["derr"]
        ):
            best = snapshot

        if rel_gap <= tol and perr <= feas_tol and derr <= feas_tol:
            status = STATUS_OPTIMAL
            best = snapshot
            break

        # Schur complement of the Newton system.
        zinvs = []
        ts = []
        schur = np.zeros((m, m))
        for x, zb, a in zip(xs, zs, core.blocks_a):
            if not x.size:
                zinvs.append(x)
                ts.append(None)
                continue
            zinv = np.linalg.inv(zb)
            zinv = hermitize(zinv)
            t = np.matmul(np.matmul(x[None], a), zinv[None])
            schur += np.einsum("ikl,jkl->ij", a.conj(), t).real
            zinvs.append(zinv)
            ts.append(t)
        if p:
            w_lp = s / z
            schur += (core.a_lp * w_lp[None, :]) @ core.a_lp.T
        schur = 0.5 * (schur + schur.T)

        diag_scale = max(1.0, float(np.trace(schur)) / max(m, 1))
        chol = None
        for jit in (0.0, 1e-13, 1e-10, 1e-7):
            try:
                chol = np.linalg.cholesky(schur + jit * diag_scale * np.eye(m))
                break
            except np.linalg.LinAlgError:
                continue
        if chol is None:
            status = STATUS_NUMERICAL
            break

        def direction(rcs, rc_lp):
            rhs = rp.copy()
            for a, rc, x, rd, zinv in zip(core.blocks_a, rcs, xs, rds, zinvs):
                if not x.size:
                    continue
                rhs -= np.einsum("ikl,kl->i", a.conj(), rc @ zinv).real
                rhs += np.einsum("ikl,kl->i", a.conj(), x @ rd @ zinv).real
            if p:
                rhs -= core.a_lp @ (rc_lp / z)
                rhs += core.a_lp @ (w_lp * rd_lp)
            dy = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
            dzs = []
            dxs = []
            for a, rc, x, rd, zinv in zip(core.blocks_a, rcs, xs, rds, zinvs):
                if not x.size:
                    dzs.append(x)
                    dxs.append(x)
                    continue
                dz = rd - np.tensordot(dy, a, axes=1)
                dx = hermitize((rc - x @ dz) @ zinv)
                dzs.append(dz)
                dxs.append(dx)
            if p:
                dz_lp = rd_lp - core.a_lp.T @ dy
                ds_lp = (rc_lp - s * dz_lp) / z
            else:
                dz_lp = np.zeros(0)
                ds_lp = np.zeros(0)
            return dy, dxs, dzs, ds_lp, dz_lp

        # Predictor (affine scaling).
        rcs_aff = [-(x @ zb) if x.size else x for x, zb in zip(xs, zs)]
        rc_lp_aff = -(s * z) if p else np.zeros(0)
        dy_a, dxs_a, dzs_a, ds_a, dz_a = direction(rcs_aff, rc_lp_aff)

        ap = min(
            [1.0]
            + [_max_step(x, dx) for x, dx in zip(xs, dxs_a) if x.size]
            + ([_max_step_lp(s, ds_a)] if p else [])
        )
        ad = min(
            [1.0]
            + [_max_step(zb, dz) for zb, dz in zip(zs, dzs_a) if zb.size]
            + ([_max_step_lp(z, dz_a)] if p else [])
        )
        gap_aff = sum(
            _ip(x + ap * dx, zb + ad * dz)
            for x, dx, zb, dz in zip(xs, dxs_a, zs, dzs_a)
            if x.size
        )
        if p:
            gap_aff += float((s + ap * ds_a) @ (z + ad * dz_a))
        sigma = min(1.0, max(0.0, (max(gap_aff, 0.0) / gap)) ** 3)

        # Corrector.
        target = sigma * mu
        rcs = [
            target * np.eye(x.shape[0]) - x @ zb - dx @ dz if x.size else x
            for x, zb, dx, dz in zip(xs, zs, dxs_a, dzs_a)
        ]
        rc_lp = target - s * z - ds_a * dz_a if p else np.zeros(0)
        dy, dxs, dzs, ds_lp, dz_lp = direction(rcs, rc_lp)

        tau = 0.98
        ap = tau * min(
            [1.0 / tau]
            + [_max_step(x, dx) for x, dx in zip(xs, dxs) if x.size]
            + ([_max_step_lp(s, ds_lp)] if p else [])
        )
        ad = tau * min(
            [1.0 / tau]
            + [_max_step(zb, dz) for zb, dz in zip(zs, dzs) if zb.size]
            + ([_max_step_lp(z, dz_lp)] if p else [])
        )
        ap = min(ap, 1.0)
        ad = min(ad, 1.0)

        if not (np.isfinite(ap) and np.isfinite(ad)):
            status = STATUS_NUMERICAL
            break
        if ap < 1e-8 and ad < 1e-8:
            stalls += 1
            if stalls >= 3:
                status = STATUS_NUMERICAL
                break
        else:
            stalls = 0

        xs = [hermitize(x + ap * dx) if x.size else x for x, dx in zip(xs, dxs)]
        zs = [hermitize(zb + ad * dz) if zb.size else zb for zb, dz in zip(zs, dzs)]
        if p:
            s = s + ap * ds_lp
            z = z + ad * dz_lp
        y = y + ad * dy

    out = dict(best)
    out["status"] = status
    out["iterations"] = iters
    return out


# ---------------------------------------------------------------------------
# public surface
# ---------------------------------------------------------------------------


def _active_blocks(problem: SdpProblem):
    """Indices of blocks that actually enter the problem; inert blocks pin to 0."""
    active = []
    for b in range(2):
        dim = problem.block_dims[b]
        if dim == 0:
            continue
        f0 = problem.objective[b]
        touched = np.abs(f0).max() > 0 if f0.size else False
        for con in problem.constraints:
            fm = (con.fa, con.fb)[b]
            if fm.size and np.abs(fm).max() > 0:
                touched = True
                break
        if touched:
            active.append(b)
    return active


def _build_core(problem: SdpProblem, active, extra_lp=0, lp_cost=None):
    """Assemble the equality-form core; one slack column per inequality."""
    m = len(problem.constraints)
    slack_rows = [j for j, c in enumerate(problem.constraints) if c.sense != "=="]
    p = len(slack_rows) + extra_lp
    blocks_c = []
    blocks_a = []
    for b in active:
        n = problem.block_dims[b]
        blocks_c.append(-problem.objective[b])
        stack = np.zeros((m, n, n), dtype=np.complex128)
        for j, con in enumerate(problem.constraints):
            stack[j] = (con.fa, con.fb)[b]
        blocks_a.append(stack)
    a_lp = np.zeros((m, p))
    for col, j in enumerate(slack_rows):
        a_lp[j, col] = 1.0 if problem.constraints[j].sense == "<=" else -1.0
    c_lp = np.zeros(p)
    if lp_cost is not None:
        c_lp[len(slack_rows):] = lp_cost
    b = np.array([c.rhs for c in problem.constraints], dtype=float)
    return CoreProblem(blocks_c, blocks_a, c_lp, a_lp, b), len(slack_rows)


def _row_scaled(problem: SdpProblem) -> tuple:
    cons = []
    scales = []
    for con in problem.constraints:
        norm = max(
            1.0,
            float(np.linalg.norm(con.fa)) if con.fa.size else 0.0,
            float(np.linalg.norm(con.fb)) if con.fb.size else 0.0,
        )
        scales.append(norm)
        cons.append(
            SdpConstraint(con.fa / norm, con.fb / norm, con.rhs / norm, con.sense)
        )
    return SdpProblem(problem.block_dims, problem.objective, cons), np.asarray(scales)


def solve(problem: SdpProblem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> SdpResult:
    """Solve a (max-form) two-block Hermitian SDP.

    Status "optimal" certifies a relative duality gap below ``tol`` and
    constraint violations below 1e-7 * (1 + |rhs|).  Hard failures are
    classified by a phase-1 relaxation pass into "infeasible" versus
    "numerical_failure"/"max_iter".
    """
    if not 1e-10 < tol < 1e-2:
        raise ValueError("tol must lie in (1e-10, 1e-2)")
    problem = problem.validated()
    scaled, _ = _row_scaled(problem)
    active = _active_blocks(scaled)
    n1, n2 = problem.block_dims
    x_out = [np.zeros((n1, n1), dtype=np.complex128), np.zeros((n2, n2), dtype=np.complex128)]

    if not active:
        # Constant problem; feasibility is just the senses against zero.
        ok = all(
            (c.sense == "<=" and c.rhs >= -1e-12)
            or (c.sense == ">=" and c.rhs <= 1e-12)
            or (c.sense == "==" and abs(c.rhs) <= 1e-12)
            for c in scaled.constraints
        )
        status = STATUS_OPTIMAL if ok else STATUS_INFEASIBLE
        return SdpResult(status, x_out[0], x_out[1], 0.0, 0.0, 0)

    core, _ = _build_core(scaled, active)
    res = solve_core(core, tol=tol, max_iter=max_iter)

    if res["status"] != STATUS_OPTIMAL:
        phase1 = _phase1_violation(scaled, active, max_iter)
        if phase1 is not None and phase1 > 1e-6:
            return SdpResult(STATUS_INFEASIBLE, x_out[0], x_out[1], 0.0, res["rel_gap"], res["iterations"])
        return SdpResult(res["status"], x_out[0], x_out[1], 0.0, res["rel_gap"], res["iterations"])

    for b, x in zip(active, res["xs"]):
        x_out[b] = x
    violation = _max_violation(problem, x_out[0], x_out[1])
    status = res["status"]
    if violation > 1e-7:
        status = STATUS_NUMERICAL
    objective = _ip(problem.objective[0], x_out[0]) + _ip(problem.objective[1], x_out[1])
    return SdpResult(status, x_out[0], x_out[1], objective, res["rel_gap"], res["iterations"], y=res["y"])


def _max_violation(problem, x1, x2) -> float:
    worst = 0.0
    for con in problem.constraints:
        val = _ip(con.fa, x1) + _ip(con.fb, x2)
        scale = 1.0 + abs(con.rhs)
        if con.sense == "<=":
            worst = max(worst, (val - con.rhs) / scale)
        elif con.sense == ">=":
            worst = max(worst, (con.rhs - val) / scale)
        else:
            worst = max(worst, abs(val - con.rhs) / scale)
    return worst


def _phase1_violation(problem: SdpProblem, active, max_iter):
    """Minimum uniform relaxation making the constraints consistent.

    Every row is widened by a shared t >= 0; the optimum is ~0 iff the
    original system is feasible.  Returns None if phase 1 itself fails.
    """
    relaxed = []
    for con in problem.constraints:
        if con.sense == "==":
            relaxed.append(SdpConstraint(con.fa, con.fb, con.rhs, "<="))
            relaxed.append(SdpConstraint(con.fa, con.fb, con.rhs, ">="))
        else:
            relaxed.append(con)
    zero = (
        np.zeros((problem.block_dims[0],) * 2, dtype=np.complex128),
        np.zeros((problem.block_dims[1],) * 2, dtype=np.complex128),
    )
    prob1 = SdpProblem(problem.block_dims, zero, relaxed)
    active1 = _active_blocks(prob1)
    core, n_slack = _build_core(prob1, active1, extra_lp=1, lp_cost=np.array([1.0]))
    # the relaxation column: <= rows get -t, >= rows get +t
    col = n_slack
    row = 0
    for con in relaxed:
        core.a_lp[row, col] = -1.0 if con.sense == "<=" else 1.0
        row += 1
    res = solve_core(core, tol=1e-7, max_iter=max_iter)
    if res["status"] != STATUS_OPTIMAL:
        return None
    return float(res["s"][col])
