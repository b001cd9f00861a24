"""Outer descent loop that reshapes the harvesting region.

The cost of a region encoded by the level-set function phi is

    J(phi) = int y0 p(x, 0) dx + alpha * length + beta * area,

with p the backward adjoint of the harvested model under the bang-bang
effort.  Its shape derivative yields the nodal descent velocity

    v = -beta + L * int_0^T (1 + p) H_eps(1 + p) r dt,

where r is the forward sensitivity; the interface-length penalty enters
as a curvature term treated semi-implicitly inside evolve_phi.  The loop
evaluates J, stops on a small decrement or an increase, otherwise steps
phi along v and repeats.  When a step increases J the step size is
halved and retried a few times before giving up; a pure descent mode
disables that retry and stops on the first increase.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import SolverFailure
from .grid import ScalarField, SpaceTimeField, simpson_integral_2d, simpson_weights
from .levelset import (
    LevelSetFunction,
    evolve_phi,
    heaviside_mollified,
    region_area,
    region_length,
)
from .pde import (
    ControlProblemParams,
    solve_adjoint,
    solve_sensitivity,
)

INITIAL_COST = 1.0e6
MAX_BACKTRACKS = 5

TRACE_COLUMNS = (
    "n",
    "cost",
    "adjoint_term",
    "length_term",
    "area_term",
    "region_area",
    "region_length",
    "phi_change",
    "theta",
    "stop_reason",
)


@dataclass
class IterationRecord:
    """One accepted iterate of the outer loop."""

    n: int
    cost: float
    adjoint_term: float
    length_term: float
    area_term: float
    region_area: float
    region_length: float
    phi_change: float
    theta: float


@dataclass
class OptimizationTrace:
    """Accepted iterates in order plus the reason the loop stopped."""

    records: list
    stop_reason: str

    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(TRACE_COLUMNS)
            last = len(self.records) - 1
            for idx, r in enumerate(self.records):
                reason = self.stop_reason if idx == last else ""
                writer.writerow(
                    [r.n]
                    + [
                        format(value, ".17g")
                        for value in (
                            r.cost,
                            r.adjoint_term,
                            r.length_term,
                            r.area_term,
                            r.region_area,
                            r.region_length,
                            r.phi_change,
                            r.theta,
                        )
                    ]
                    + [reason]
                )


def _cost_from_adjoint(
    phi: LevelSetFunction, adjoint: SpaceTimeField, params: ControlProblemParams
):
    grid = params.grid
    adjoint_term = simpson_integral_2d(
        ScalarField(grid, params.y0.values * adjoint.values[0])
    )
    length_term = params.alpha * region_length(phi, params.mollifier)
    area_term = params.beta * region_area(phi, params.mollifier)
    total = adjoint_term + length_term + area_term
    return total, (adjoint_term, length_term, area_term)


def evaluate_J(phi: LevelSetFunction, params: ControlProblemParams):
    """Cost of the region {phi > 0} and its three components.

    Solves the adjoint internally and returns (J, (adjoint term,
    weighted length term, weighted area term)).
    """
    if phi.grid != params.grid:
        raise ValueError("phi is not on the problem grid")
    adjoint = solve_adjoint(phi, params)
    return _cost_from_adjoint(phi, adjoint, params)


def descent_velocity(
    phi: LevelSetFunction,
    adjoint: SpaceTimeField,
    sensitivity: SpaceTimeField,
    params: ControlProblemParams,
) -> ScalarField:
    """Nodal descent velocity -beta + L int (1+p) H_eps(1+p) r dt.

    The time integral uses composite Simpson over the M (even) steps.
    The curvature part of the descent direction is not included here;
    evolve_phi applies it implicitly with weight alpha.
    """
    grid = params.grid
    if phi.grid != grid or adjoint.grid != grid or sensitivity.grid != grid:
        raise ValueError("inputs are not on the problem grid")
    shifted = 1.0 + adjoint.values
    integrand = shifted * heaviside_mollified(shifted, params.mollifier)
    integrand = integrand * sensitivity.values
    weights = simpson_weights(grid.M, grid.dt)
    integral = np.tensordot(weights, integrand, axes=(0, 0))
    return ScalarField(grid, -params.beta + params.L * integral)


def _phi_distance(a: LevelSetFunction, b: LevelSetFunction) -> float:
    diff = a.phi.values - b.phi.values
    return float(np.sqrt(simpson_integral_2d(ScalarField(a.grid, diff * diff))))


def optimize_region(
    phi0: LevelSetFunction,
    params: ControlProblemParams,
    max_iter: int = 200,
    paper_mode: bool = False,
    callback=None,
):
    """Run the outer descent loop from phi0.

    Each pass solves the adjoint, evaluates J, checks the stopping rules
    (small decrement, increase, small phi change, iteration budget),
    then solves the sensitivity and moves phi one semi-implicit step
    along the descent velocity.  An increase triggers step-size halving
    with up to 5 retries unless paper_mode is set, in which case the
    first increase stops the loop on the spot.

    Returns (best iterate by cost, trace).  Solver failures re-raise
    with the partial trace attached as exc.trace.  The optional callback
    receives (n, phi, record) after each accepted iterate.

    Stop reasons: "J tolerance", "J increase", "phi tolerance",
    "iteration budget".
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if phi0.grid != params.grid:
        raise ValueError("phi0 is not on the problem grid")
    m = params.mollifier
    records: list = []
    stop = None
    pending_stop = None
    phi = phi0
    best_phi = phi0
    best_cost = np.inf
    cost_prev = INITIAL_COST
    phi_change = 0.0
    theta_used = 0.0
    n = 1
    try:
        adjoint = solve_adjoint(phi, params)
        cost, parts = _cost_from_adjoint(phi, adjoint, params)
        while True:
            record = IterationRecord(
                n=n,
                cost=cost,
                adjoint_term=parts[0],
                length_term=parts[1],
                area_term=parts[2],
                region_area=region_area(phi, m),
                region_length=region_length(phi, m),
                phi_change=phi_change,
                theta=theta_used,
            )
            records.append(record)
            if cost < best_cost:
                best_cost = cost
                best_phi = phi
            if callback is not None:
                callback(n, phi, record)
            if pending_stop is not None:
                stop = pending_stop
                break
            if abs(cost - cost_prev) < params.eps1:
                stop = "J tolerance"
                break
            if cost >= cost_prev:
                stop = "J increase"
                break
            if n >= max_iter:
                stop = "iteration budget"
                break
            sensitivity = solve_sensitivity(phi, adjoint, params)
            velocity = descent_velocity(phi, adjoint, sensitivity, params)
            theta = params.theta0
            attempts = 1 if paper_mode else MAX_BACKTRACKS + 1
            accepted = False
            closest_gap = np.inf
            for _ in range(attempts):
                phi_next = evolve_phi(phi, velocity, theta, m, alpha=params.alpha)
                adjoint_next = solve_adjoint(phi_next, params)
                cost_next, parts_next = _cost_from_adjoint(
                    phi_next, adjoint_next, params
                )
                if paper_mode or cost_next < cost:
                    accepted = True
                    break
                closest_gap = min(closest_gap, abs(cost_next - cost))
                theta *= 0.5
            if not accepted:
                # No step decreased J; the non-decrease rule fires, with
                # the small-decrement clause taking precedence when some
                # trial landed within the J tolerance.
                stop = "J tolerance" if closest_gap < params.eps1 else "J increase"
                break
            phi_change = _phi_distance(phi_next, phi)
            theta_used = theta
            cost_prev = cost
            phi = phi_next
            adjoint = adjoint_next
            cost = cost_next
            parts = parts_next
            n += 1
            if phi_change < params.eps2:
                pending_stop = "phi tolerance"
    except SolverFailure as exc:
        exc.trace = OptimizationTrace(records, "solver failure")
        raise
    return best_phi, OptimizationTrace(records, stop)
