"""Trace-constrained SDP solving and candidate-vector extraction.

The generic surface is SdpProblem -> solve -> SdpSolution -> extract_vector.
Two assembly helpers turn the stage lifts into solvable problems:

* stage1_sdp_problem relaxes the lifted joint problem. On top of the lift's
  own constraints it pins the homogenizer diagonal to one and adds validity
  cuts (nonnegative bandwidth shares, and a per-user floor tying the delay
  variable to the compute-only delay). Without the pin and cuts the
  relaxation is unbounded below: dropping the rank-one requirement lets the
  bandwidth block go negative and decouples the delay variable entirely.
  Every cut is satisfied by each feasible point of the original problem, so
  the optimum stays a true lower bound.

* stage2_sdp_problem encodes the fixed-decision bandwidth problem exactly.
  Each offloader contributes a 2x2 principal block [[beta, g], [g, theta -
  k_fixed]] with g pinned to sqrt(k_band); positive semidefiniteness of the
  block is precisely beta * (theta - k_fixed) >= k_band, the user's delay
  cap. The solve therefore reproduces the exact min-max bandwidth optimum
  (the same value the bisection allocator finds), and the homogenizer
  column carries the optimal shares.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import interior_point
from .errors import ConfigurationError, DegenerateSolutionError
from .lift import Stage1Lift, Stage2Lift


@dataclass(frozen=True)
class SolverTolerances:
    feasibility: float = 1e-8
    gap: float = 1e-8
    psd: float = 1e-8
    max_iters: int = 100

    def __post_init__(self):
        if min(self.feasibility, self.gap, self.psd) <= 0 or self.max_iters < 1:
            raise ConfigurationError("solver tolerances must be positive")


DEFAULT_TOLERANCES = SolverTolerances()


@dataclass(frozen=True)
class SdpProblem:
    """minimize Tr(objective @ Y) over PSD Y with trace equalities/inequalities."""

    dim: int
    objective: np.ndarray
    equalities: list[tuple[np.ndarray, float]] = field(default_factory=list)
    inequalities: list[tuple[np.ndarray, float]] = field(default_factory=list)

    def __post_init__(self):
        shape = (self.dim, self.dim)
        mats = [("objective", self.objective)]
        mats += [(f"equality[{i}]", a) for i, (a, _) in enumerate(self.equalities)]
        mats += [(f"inequality[{j}]", g) for j, (g, _) in enumerate(self.inequalities)]
        for name, a in mats:
            a = np.asarray(a)
            if a.shape != shape:
                raise ConfigurationError(f"{name} has shape {a.shape}, expected {shape}")
            if not np.array_equal(a, a.T):
                raise ConfigurationError(f"{name} is not symmetric")


@dataclass(frozen=True)
class SdpSolution:
    Y: np.ndarray
    objective_value: float
    max_eq_residual: float
    max_ineq_violation: float
    min_eigenvalue: float
    rank1_ratio: float
    iterations: int = 0


def solve(problem: SdpProblem, tolerances: SolverTolerances | None = None) -> SdpSolution:
    """Solve to the requested feasibility/gap tolerances.

    Raises SdpInfeasibleError or SdpUnboundedError when the interior-point
    engine produces a certificate, and SdpNonConvergenceError (carrying the
    best iterate) when the iteration cap is hit.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    result = interior_point.solve_hsd(
        problem.objective, problem.equalities, problem.inequalities, problem.dim,
        tol_feas=tol.feasibility, tol_gap=tol.gap, max_iters=tol.max_iters,
    )
    y_mat = result.matrix
    eq_res = max((abs(float(np.vdot(a, y_mat)) - r) for a, r in problem.equalities), default=0.0)
    ineq_vio = max((float(np.vdot(g, y_mat)) - r for g, r in problem.inequalities), default=0.0)
    eigvals = np.linalg.eigvalsh(y_mat)
    if problem.dim >= 2 and eigvals[-2] > 0:
        ratio = float(eigvals[-1] / eigvals[-2])
    else:
        ratio = float("inf")
    return SdpSolution(
        Y=y_mat,
        objective_value=float(np.vdot(problem.objective, y_mat)),
        max_eq_residual=eq_res,
        max_ineq_violation=max(0.0, ineq_vio),
        min_eigenvalue=float(eigvals[0]),
        rank1_ratio=ratio,
        iterations=result.iterations,
    )


def extract_vector(solution: SdpSolution, homogenizer_index: int,
                   method: str = "column") -> np.ndarray:
    """Read a candidate point out of the solution matrix.

    The default reads the homogenizer column divided by its diagonal entry,
    which is exact whenever the solution is rank one. method="eigenvector"
    rescales the dominant eigenvector instead; use it when rank1_ratio is
    small (say below 10) and the column read looks degenerate.
    """
    y_mat = solution.Y
    n = y_mat.shape[0]
    h = homogenizer_index
    if not 0 <= h < n:
        raise ConfigurationError(f"homogenizer index {h} outside [0, {n})")
    if method == "column":
        pivot = y_mat[h, h]
        if pivot <= 1e-12:
            raise DegenerateSolutionError(
                f"homogenizer diagonal is {pivot:.3e}; cannot normalize"
            )
        vec = y_mat[:, h] / pivot
    elif method == "eigenvector":
        eigvals, eigvecs = np.linalg.eigh(y_mat)
        lead = eigvecs[:, -1] * np.sqrt(max(eigvals[-1], 0.0))
        if abs(lead[h]) <= 1e-9:
            raise DegenerateSolutionError(
                f"dominant eigenvector has homogenizer entry {lead[h]:.3e}"
            )
        vec = lead / lead[h]
    else:
        raise ConfigurationError(f"unknown extraction method {method!r}")
    return np.delete(vec, h)


def _pair(n: int, i: int, j: int, value: float) -> np.ndarray:
    q = np.zeros((n, n))
    q[i, j] += value / 2
    q[j, i] += value / 2
    return q


def stage1_sdp_problem(lift: Stage1Lift) -> SdpProblem:
    """Relaxation of the lifted joint problem, pinned and made bounded.

    Added on top of the lift: the homogenizer pin Tr(E_hh Y) = 1, one
    nonnegativity cut per bandwidth share, and one per-user floor
    t >= k_local x + k_edge y (the compute part of the delay, valid for
    every feasible assignment). The cut coefficients are read back from the
    lift's own delay-cap matrices.
    """
    layout = lift.layout
    n = lift.dim
    h = layout.hom_index
    t = layout.t_index

    pin = np.zeros((n, n))
    pin[h, h] = 1.0
    equalities = list(lift.eq_constraints) + [(pin, 1.0)]

    inequalities = list(lift.ineq_constraints)
    for m in range(layout.num_users):
        ix, iy, ib = layout.x_index(m), layout.y_index(m), layout.beta_index(m)
        cap = lift.ineq_constraints[1 + m][0]
        k_local = 2.0 * cap[ix, ib]
        k_edge = 2.0 * cap[iy, ib]
        inequalities.append((_pair(n, ib, h, -1.0), 0.0))
        floor = _pair(n, ix, h, k_local) + _pair(n, iy, h, k_edge) + _pair(n, t, h, -1.0)
        inequalities.append((floor, 0.0))

    return SdpProblem(dim=n, objective=lift.objective,
                      equalities=equalities, inequalities=inequalities)


@dataclass(frozen=True)
class Stage2Problem:
    """Exact conic embedding of the bandwidth problem plus its index map."""

    problem: SdpProblem
    num_users: int
    offloaders: tuple[int, ...]     # user indices with an upload term
    theta_index: int
    hom_index: int

    def extract_allocation(self, solution: SdpSolution) -> tuple[np.ndarray, float]:
        """Per-user bandwidth shares and the worst-delay value."""
        vec = extract_vector(solution, self.hom_index)
        beta = np.zeros(self.num_users)
        for slot, user in enumerate(self.offloaders):
            beta[user] = max(0.0, float(vec[slot]))
        return beta, float(vec[self.theta_index])


def stage2_sdp_problem(lift: Stage2Lift) -> Stage2Problem:
    """Assemble the exact stage-2 SDP from the lift's coefficients.

    Coordinates: one share carrier and one slack carrier per offloader, then
    the delay variable, then the homogenizer. For offloader slots a (share)
    and c (slack) the equalities force Y[a,a] = Y[a,h] (the share read off
    the column), Y[a,c] = sqrt(k_band) and Y[c,c] = theta - k_fixed, so the
    2x2 minor on (a, c) being PSD is exactly the user's delay cap. Users
    computing locally have a zero upload term and need no block. With no
    offloaders at all the problem reduces to the floor theta >= max k_fixed.
    """
    off = tuple(int(m) for m in np.flatnonzero(lift.k_band > 0.0))
    n_off = len(off)
    n = 2 * n_off + 2
    t = 2 * n_off
    h = 2 * n_off + 1

    pin = np.zeros((n, n))
    pin[h, h] = 1.0
    equalities: list[tuple[np.ndarray, float]] = [(pin, 1.0)]
    inequalities: list[tuple[np.ndarray, float]] = []

    for slot, user in enumerate(off):
        a, c = slot, n_off + slot
        diag_link = np.zeros((n, n))
        diag_link[a, a] = 1.0
        equalities.append((diag_link + _pair(n, a, h, -1.0), 0.0))
        equalities.append((_pair(n, a, c, 1.0), float(np.sqrt(lift.k_band[user]))))
        slack_link = np.zeros((n, n))
        slack_link[c, c] = 1.0
        equalities.append((slack_link + _pair(n, t, h, -1.0), -float(lift.k_fixed[user])))

    if n_off:
        band = np.zeros((n, n))
        for slot in range(n_off):
            band += _pair(n, slot, h, 1.0)
        inequalities.append((band, 1.0))
    else:
        inequalities.append((_pair(n, t, h, -1.0), -float(lift.k_fixed.max())))

    objective = _pair(n, t, h, 1.0)
    problem = SdpProblem(dim=n, objective=objective,
                         equalities=equalities, inequalities=inequalities)
    return Stage2Problem(problem=problem, num_users=lift.layout.num_users,
                         offloaders=off, theta_index=t, hom_index=h)
