"""Quadratic lifts of the two offloading problems into trace form.

Stage 1 lifts the joint decision-and-bandwidth problem over the stacked
variable w = [x_1..x_M, y_1..y_M, beta_1..beta_M, t] with a homogenizing
coordinate appended (z = [w; 1], dim 3M+2). Binary constraints become
diagonal quadratics, the complementarity x_m + y_m = 1 stays linear, and
each user's delay bound becomes a bilinear inequality in (x, y, beta, t).

Stage 2 fixes the decisions and lifts the bandwidth-only problem over
v = [beta_1..beta_M, theta, 1] with a second homogenizer appended
(s = [v; 1], dim M+3). Both homogenizing coordinates are kept so the
matrix shapes match the published block structure.

Every emitted matrix is symmetrized with (Q + Q')/2; the quadratic form
z'Qz is invariant under that replacement and PSD solvers require
symmetric data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError
from .model import DecisionVector, Scenario, delay_coefficients, fixed_decision_coefficients


def _sym(q: np.ndarray) -> np.ndarray:
    return 0.5 * (q + q.T)


@dataclass(frozen=True)
class Stage1Layout:
    """Index map for the stage-1 stacked vector (0-based)."""

    num_users: int

    @property
    def dim(self) -> int:
        return 3 * self.num_users + 2

    def x_index(self, m: int) -> int:
        return m

    def y_index(self, m: int) -> int:
        return self.num_users + m

    def beta_index(self, m: int) -> int:
        return 2 * self.num_users + m

    @property
    def t_index(self) -> int:
        return 3 * self.num_users

    @property
    def hom_index(self) -> int:
        return 3 * self.num_users + 1

    def pack(self, x, y, beta, t: float) -> np.ndarray:
        z = np.empty(self.dim)
        m = self.num_users
        z[0:m] = x
        z[m:2 * m] = y
        z[2 * m:3 * m] = beta
        z[self.t_index] = t
        z[self.hom_index] = 1.0
        return z

    def unpack(self, z) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise DimensionMismatchError(f"expected vector of length {self.dim}, got {z.shape}")
        m = self.num_users
        return z[0:m].copy(), z[m:2 * m].copy(), z[2 * m:3 * m].copy(), float(z[self.t_index])


@dataclass(frozen=True)
class Stage2Layout:
    """Index map for the stage-2 stacked vector (0-based)."""

    num_users: int

    @property
    def dim(self) -> int:
        return self.num_users + 3

    def beta_index(self, m: int) -> int:
        return m

    @property
    def theta_index(self) -> int:
        return self.num_users

    @property
    def v_hom_index(self) -> int:
        return self.num_users + 1

    @property
    def s_hom_index(self) -> int:
        return self.num_users + 2

    def pack(self, beta, theta: float) -> np.ndarray:
        s = np.empty(self.dim)
        s[0:self.num_users] = beta
        s[self.theta_index] = theta
        s[self.v_hom_index] = 1.0
        s[self.s_hom_index] = 1.0
        return s

    def unpack(self, s) -> tuple[np.ndarray, float]:
        s = np.asarray(s, dtype=float)
        if s.shape != (self.dim,):
            raise DimensionMismatchError(f"expected vector of length {self.dim}, got {s.shape}")
        return s[0:self.num_users].copy(), float(s[self.theta_index])


@dataclass(frozen=True)
class Stage1Lift:
    dim: int
    objective: np.ndarray
    eq_constraints: list[tuple[np.ndarray, float]]
    ineq_constraints: list[tuple[np.ndarray, float]]
    layout: Stage1Layout


@dataclass(frozen=True)
class Stage2Lift:
    dim: int
    objective: np.ndarray
    ineq_constraints: list[tuple[np.ndarray, float]]
    layout: Stage2Layout
    k_fixed: np.ndarray = field(repr=False)   # x-gated local plus y-gated edge compute
    k_band: np.ndarray = field(repr=False)    # y-gated upload, divided by beta in scalar form
    eq_constraints: list[tuple[np.ndarray, float]] = field(default_factory=list)


def build_stage1(scenario: Scenario) -> Stage1Lift:
    """Trace-form data of the joint problem.

    Equalities per user: x(1-x) = 0, y(1-y) = 0, x + y = 1. Inequalities:
    one bandwidth sum, then one delay cap per user linking (x, y, beta, t).
    """
    m_users = scenario.num_users
    layout = Stage1Layout(m_users)
    n = layout.dim
    h = layout.hom_index
    t = layout.t_index
    k_local, k_edge, k_upload = delay_coefficients(scenario)

    eqs: list[tuple[np.ndarray, float]] = []
    ineqs: list[tuple[np.ndarray, float]] = []

    for m in range(m_users):
        ix, iy, ib = layout.x_index(m), layout.y_index(m), layout.beta_index(m)

        q = np.zeros((n, n))
        q[ix, ix] = 1.0
        q[ix, h] -= 0.5
        q[h, ix] -= 0.5
        eqs.append((_sym(q), 0.0))

        q = np.zeros((n, n))
        q[iy, iy] = 1.0
        q[iy, h] -= 0.5
        q[h, iy] -= 0.5
        eqs.append((_sym(q), 0.0))

        q = np.zeros((n, n))
        q[ix, h] = q[h, ix] = 0.5
        q[iy, h] = q[h, iy] = 0.5
        eqs.append((_sym(q), 1.0))

    band = np.zeros((n, n))
    for m in range(m_users):
        ib = layout.beta_index(m)
        band[ib, h] = band[h, ib] = 0.5
    ineqs.append((_sym(band), 1.0))

    for m in range(m_users):
        ix, iy, ib = layout.x_index(m), layout.y_index(m), layout.beta_index(m)
        q = np.zeros((n, n))
        q[ix, ib] += k_local[m] / 2
        q[ib, ix] += k_local[m] / 2
        q[iy, ib] += k_edge[m] / 2
        q[ib, iy] += k_edge[m] / 2
        q[iy, h] += k_upload[m] / 2
        q[h, iy] += k_upload[m] / 2
        q[ib, t] -= 0.5
        q[t, ib] -= 0.5
        ineqs.append((_sym(q), 0.0))

    objective = np.zeros((n, n))
    objective[t, h] = objective[h, t] = 0.5

    return Stage1Lift(dim=n, objective=_sym(objective), eq_constraints=eqs,
                      ineq_constraints=ineqs, layout=layout)


def build_stage2(scenario: Scenario, decisions: DecisionVector) -> Stage2Lift:
    """Trace-form data of the fixed-decision bandwidth problem.

    The bandwidth sum is weighted by the offload indicator; each user's
    cap couples its bandwidth share with the worst-delay variable theta.
    """
    m_users = scenario.num_users
    if len(decisions.offload) != m_users:
        raise DimensionMismatchError(
            f"decision vector has {len(decisions.offload)} users, scenario has {m_users}"
        )
    layout = Stage2Layout(m_users)
    n = layout.dim
    th = layout.theta_index
    vh = layout.v_hom_index
    sh = layout.s_hom_index
    k_fixed, k_band = fixed_decision_coefficients(scenario, decisions)
    y = np.array(decisions.offload, dtype=float)

    ineqs: list[tuple[np.ndarray, float]] = []

    band = np.zeros((n, n))
    for m in range(m_users):
        band[m, sh] += y[m] / 2
        band[sh, m] += y[m] / 2
    ineqs.append((_sym(band), 1.0))

    for m in range(m_users):
        q = np.zeros((n, n))
        q[m, th] -= 0.5
        q[th, m] -= 0.5
        q[m, sh] += k_fixed[m] / 2
        q[sh, m] += k_fixed[m] / 2
        q[vh, sh] += k_band[m] / 2
        q[sh, vh] += k_band[m] / 2
        ineqs.append((_sym(q), 0.0))

    objective = np.zeros((n, n))
    objective[th, sh] = objective[sh, th] = 0.5

    return Stage2Lift(dim=n, objective=_sym(objective), ineq_constraints=ineqs,
                      layout=layout, k_fixed=k_fixed, k_band=k_band)


@dataclass(frozen=True)
class QuadraticEvaluation:
    objective: float
    eq_residuals: np.ndarray
    ineq_residuals: np.ndarray


def eval_quadratic(lift, vector) -> QuadraticEvaluation:
    """Objective value and per-constraint residuals z'Qz - rhs at a point.

    Golden-test hook: lets matrix construction be checked term for term
    against the scalar delay formulas.
    """
    z = np.asarray(vector, dtype=float)
    if z.shape != (lift.dim,):
        raise DimensionMismatchError(f"expected vector of length {lift.dim}, got {z.shape}")
    eq = getattr(lift, "eq_constraints", [])
    eq_res = np.array([z @ q @ z - rhs for q, rhs in eq])
    ineq_res = np.array([z @ q @ z - rhs for q, rhs in lift.ineq_constraints])
    return QuadraticEvaluation(objective=float(z @ lift.objective @ z),
                               eq_residuals=eq_res, ineq_residuals=ineq_res)


def dump_matrices(lift, stream) -> None:
    """Plain-text dense dump: a header line naming each block, then rows."""

    def emit(name: str, q: np.ndarray):
        stream.write(f"# {name} ({q.shape[0]}x{q.shape[1]})\n")
        for row in q:
            stream.write(" ".join(f"{v:.17g}" for v in row) + "\n")

    emit("objective", lift.objective)
    for i, (q, rhs) in enumerate(getattr(lift, "eq_constraints", [])):
        emit(f"equality[{i}] rhs={rhs:.17g}", q)
    for i, (q, rhs) in enumerate(lift.ineq_constraints):
        emit(f"inequality[{i}] rhs={rhs:.17g}", q)
