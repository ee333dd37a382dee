"""Dense primal-dual interior-point solver for small trace-constrained SDPs.

Solves   minimize    Tr(C X)
         subject to  Tr(A_i X)  = b_i
                     Tr(G_j X) <= h_j
                     X PSD

via the homogeneous self-dual embedding with HKM scaling and a Mehrotra
predictor-corrector step. Inequality slacks live in a nonnegative block
alongside the PSD block, so each iteration reduces to one m x m Schur
factorization (m = number of constraints) plus a handful of n x n dense
operations. Intended regime: n up to a few dozen, m up to a couple hundred.

The embedding keeps a strictly feasible interior at all times, so no
feasible starting point is needed, and primal/dual infeasibility emerge as
certificates (kappa dominating tau) rather than as solver stalls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import (ConfigurationError, SdpInfeasibleError,
                     SdpNonConvergenceError, SdpUnboundedError)


def _sym(u: np.ndarray) -> np.ndarray:
    return 0.5 * (u + u.T)


@dataclass(frozen=True)
class IpmResult:
    matrix: np.ndarray        # recovered primal PSD matrix
    objective: float
    iterations: int
    primal_residual: float    # scaled residual norms at termination
    dual_residual: float
    gap: float


def _chol_psd_pair(x_mat: np.ndarray, z_mat: np.ndarray, n: int) -> np.ndarray:
    """Stacked Cholesky of the two cone blocks, with a tiny floor on failure."""
    stacked = np.stack([x_mat, z_mat])
    try:
        return np.linalg.cholesky(stacked)
    except np.linalg.LinAlgError:
        out = np.empty_like(stacked)
        for k in range(2):
            try:
                out[k] = np.linalg.cholesky(stacked[k])
            except np.linalg.LinAlgError:
                floor = (abs(np.linalg.eigvalsh(stacked[k])[0])
                         + 1e-12 * max(1.0, np.trace(stacked[k]) / n))
                out[k] = np.linalg.cholesky(stacked[k] + floor * np.eye(n))
        return out


def _max_step_psd_pair(chols: np.ndarray, dx: np.ndarray, dz: np.ndarray) -> float:
    """Largest a keeping both L_k L_k' + a*dM_k PSD, batched over k."""
    dm = np.stack([dx, dz])
    scaled = np.linalg.solve(chols, np.swapaxes(np.linalg.solve(chols, dm), 1, 2))
    wmin = float(np.linalg.eigvalsh(scaled + np.swapaxes(scaled, 1, 2))[:, 0].min()) / 2.0
    if wmin >= -1e-14:
        return np.inf
    return 1.0 / max(1e-14, -wmin)


def _max_step_vec(v: np.ndarray, dv: np.ndarray) -> float:
    mask = dv < 0
    if not mask.any():
        return np.inf
    return float((v[mask] / -dv[mask]).min())


def solve_hsd(objective, equalities, inequalities, dim,
              tol_feas: float = 1e-8, tol_gap: float = 1e-8,
              max_iters: int = 100) -> IpmResult:
    """Run the homogeneous self-dual interior-point method.

    Raises SdpInfeasibleError / SdpUnboundedError on certificates and
    SdpNonConvergenceError (carrying the best iterate) on the iteration cap.
    """
    n = int(dim)
    m_eq, m_in = len(equalities), len(inequalities)
    m = m_eq + m_in
    if m == 0:
        raise ConfigurationError("problem has no constraints; nothing to solve")

    constraint = np.zeros((m, n, n))
    rhs = np.zeros(m)
    for i, (a, r) in enumerate(equalities):
        constraint[i] = _sym(np.asarray(a, dtype=float))
        rhs[i] = r
    for j, (g, r) in enumerate(inequalities):
        constraint[m_eq + j] = _sym(np.asarray(g, dtype=float))
        rhs[m_eq + j] = r

    # scale rows (and the slack coefficient with them) to unit norm
    row_norm = np.sqrt((constraint.reshape(m, -1) ** 2).sum(axis=1)
                       + np.concatenate([np.zeros(m_eq), np.ones(m_in)]))
    row_norm[row_norm == 0] = 1.0
    constraint /= row_norm[:, None, None]
    b = rhs / row_norm
    slack_coef = 1.0 / row_norm[m_eq:]
    obj_norm = max(1.0, float(np.linalg.norm(objective)))
    cmat = _sym(np.asarray(objective, dtype=float)) / obj_norm

    flat = constraint.reshape(m, n * n)
    # [F_1 | F_2 | ... ] stacked horizontally for single-GEMM products
    horiz = constraint.transpose(1, 0, 2).reshape(n, m * n)

    def a_op(x_mat, slack):
        v = flat @ x_mat.ravel()
        if m_in:
            v[m_eq:] += slack_coef * slack
        return v

    def a_adj_psd(yv):
        return (yv @ flat).reshape(n, n)

    x_mat = np.eye(n)
    z_mat = np.eye(n)
    slack = np.ones(m_in)
    zlp = np.ones(m_in)
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0

    b_scale = 1.0 + np.abs(b).max(initial=0.0)
    c_scale = 1.0 + np.abs(cmat).max()
    nu = n + m_in + 1.0
    pres = dres = relgap = np.inf
    best = None          # (score, IpmResult) of the most balanced iterate seen
    stalled = 0

    for it in range(max_iters):
        rp = a_op(x_mat, slack) - b * tau
        rd_psd = -a_adj_psd(y) + cmat * tau - z_mat
        rd_lp = -slack_coef * y[m_eq:] - zlp
        pobj_h = float(np.vdot(cmat, x_mat))
        rg = float(b @ y) - pobj_h - kappa
        comp = float(np.vdot(x_mat, z_mat)) + (float(slack @ zlp) if m_in else 0.0)
        mu = (comp + tau * kappa) / nu

        pobj = pobj_h / tau * obj_norm
        pres = float(np.abs(rp).max()) / tau / b_scale
        dres = max(float(np.abs(rd_psd).max()),
                   float(np.abs(rd_lp).max(initial=0.0))) / tau / c_scale
        relgap = (comp / tau ** 2) / (1.0 + abs(pobj_h / tau))
        score = max(pres / tol_feas, dres / tol_feas, relgap / tol_gap)
        if best is None or score < best[0]:
            best = (score, IpmResult(matrix=_sym(x_mat / tau), objective=pobj,
                                     iterations=it, primal_residual=pres,
                                     dual_residual=dres, gap=relgap))
        if score <= 1.0:
            return best[1]
        # stop on stall: near the numerical floor further steps only add noise
        if stalled >= 3:
            break

        # certificate checks once kappa dominates or the path bottoms out
        if kappa / max(tau, 1e-300) > 1e4 or mu < 0.01 * tol_gap:
            by = float(b @ y)
            if by > tol_feas:
                ray_res = max(float(np.abs(-a_adj_psd(y) - z_mat).max()),
                              float(np.abs(rd_lp).max(initial=0.0)))
                if ray_res / by <= 100 * tol_feas:
                    raise SdpInfeasibleError(
                        f"primal infeasibility certificate after {it} iterations"
                    )
            if pobj_h < -tol_feas:
                if float(np.abs(a_op(x_mat, slack)).max()) / -pobj_h <= 100 * tol_feas:
                    raise SdpUnboundedError(
                        f"dual infeasibility certificate after {it} iterations"
                    )

        z_inv = _sym(np.linalg.inv(z_mat))
        chols = _chol_psd_pair(x_mat, z_mat, n)
        # Schur matrix M[i,k] = Tr(F_i X F_k Zinv) plus the LP diagonal
        xf = (x_mat @ horiz).reshape(n, m, n).transpose(1, 0, 2)
        xfzi = (xf.reshape(m * n, n) @ z_inv).reshape(m, n, n)
        schur = flat @ xfzi.transpose(0, 2, 1).reshape(m, n * n).T
        if m_in:
            schur[m_eq:, m_eq:][np.diag_indices(m_in)] += (slack / zlp) * slack_coef ** 2
        # static regularization keeps late, ill-conditioned systems solvable
        schur[np.diag_indices(m)] += 1e-13 * max(1.0, np.trace(schur) / m)
        try:
            lu = lu_factor(schur)
        except Exception as exc:  # singular Schur: give up with diagnostics
            raise SdpNonConvergenceError(
                f"Schur factorization failed at iteration {it}: {exc}",
                best_matrix=_sym(x_mat / tau),
                residuals=dict(primal=pres, dual=dres, gap=relgap),
            ) from exc

        def schur_solve(rhs_vec):
            sol = lu_solve(lu, rhs_vec)
            sol += lu_solve(lu, rhs_vec - schur @ sol)
            return sol

        t_rd = _sym(x_mat @ rd_psd @ z_inv)
        t_rd_lp = (slack / zlp) * rd_lp if m_in else np.zeros(0)
        t_of_c = _sym(x_mat @ cmat @ z_inv)
        pair = flat @ np.stack([t_of_c.ravel(), t_rd.ravel()], axis=1)
        a_tc, a_trd = pair[:, 0], pair[:, 1].copy()
        if m_in:
            a_trd[m_eq:] += slack_coef * t_rd_lp
        g1 = schur_solve(a_tc + b)
        c_tc = float(np.vdot(cmat, t_of_c))
        c_trd = float(np.vdot(cmat, t_rd))
        b_minus_atc = b - a_tc

        def directions(sigma, corr_psd, corr_lp, corr_tk):
            eta = 1.0 - sigma
            rc_psd = sigma * mu * z_inv - x_mat - corr_psd
            rc_lp = ((sigma * mu - slack * zlp - corr_lp) / zlp) if m_in else np.zeros(0)
            a_rc = flat @ rc_psd.ravel()
            if m_in:
                a_rc[m_eq:] += slack_coef * rc_lp
            g2 = schur_solve(-eta * rp - a_rc + eta * a_trd)
            num = (float(np.vdot(cmat, rc_psd)) - eta * c_trd
                   + (sigma * mu - tau * kappa - corr_tk) / tau - eta * rg
                   - float(b_minus_atc @ g2))
            den = float(b_minus_atc @ g1) + c_tc + kappa / tau
            d_tau = num / den
            d_y = g2 + d_tau * g1
            d_z = _sym(-a_adj_psd(d_y) + cmat * d_tau + eta * rd_psd)
            d_zlp = -slack_coef * d_y[m_eq:] + eta * rd_lp
            d_x = _sym(rc_psd - _sym(x_mat @ d_z @ z_inv))
            d_slack = rc_lp - (slack / zlp) * d_zlp
            d_kappa = (sigma * mu - tau * kappa - corr_tk) / tau - (kappa / tau) * d_tau
            return d_x, d_slack, d_y, d_z, d_zlp, d_tau, d_kappa

        def step_bound(d_x, d_slack, d_z, d_zlp, d_tau, d_kappa):
            return min(_max_step_psd_pair(chols, d_x, d_z),
                       _max_step_vec(slack, d_slack), _max_step_vec(zlp, d_zlp),
                       _max_step_vec(np.array([tau, kappa]), np.array([d_tau, d_kappa])))

        d_x, d_slack, d_y, d_z, d_zlp, d_tau, d_kappa = directions(0.0, 0.0, 0.0, 0.0)
        alpha = min(1.0, 0.99 * step_bound(d_x, d_slack, d_z, d_zlp, d_tau, d_kappa))
        mu_aff = (float(np.vdot(x_mat + alpha * d_x, z_mat + alpha * d_z))
                  + (float((slack + alpha * d_slack) @ (zlp + alpha * d_zlp)) if m_in else 0.0)
                  + (tau + alpha * d_tau) * (kappa + alpha * d_kappa)) / nu
        sigma = min(0.99, max(1e-10, (max(mu_aff, 0.0) / mu) ** 3))

        corr_psd = _sym(d_x @ d_z @ z_inv)
        corr_lp = d_slack * d_zlp if m_in else 0.0
        corr_tk = d_tau * d_kappa
        d_x, d_slack, d_y, d_z, d_zlp, d_tau, d_kappa = directions(sigma, corr_psd, corr_lp, corr_tk)
        frac = 0.98 if mu > 1e-7 else 0.995
        alpha = min(1.0, frac * step_bound(d_x, d_slack, d_z, d_zlp, d_tau, d_kappa))
        stalled = stalled + 1 if (alpha < 1e-8 or mu < 1e-15) else 0

        x_mat = _sym(x_mat + alpha * d_x)
        z_mat = _sym(z_mat + alpha * d_z)
        slack = slack + alpha * d_slack
        zlp = zlp + alpha * d_zlp
        y = y + alpha * d_y
        tau += alpha * d_tau
        kappa += alpha * d_kappa

    achieved = best[1] if best is not None else None
    detail = ("stalled" if stalled >= 3 else f"no convergence within {max_iters} iterations")
    raise SdpNonConvergenceError(
        f"{detail} (best pres={achieved.primal_residual:.2e} "
        f"dres={achieved.dual_residual:.2e} gap={achieved.gap:.2e})"
        if achieved is not None else detail,
        best_matrix=achieved.matrix if achieved is not None else None,
        residuals=(dict(primal=achieved.primal_residual, dual=achieved.dual_residual,
                        gap=achieved.gap) if achieved is not None else {}),
    )
