"""Run several programs on one instance and collect a :class:`SolveReport`."""

from __future__ import annotations

from ..sdpcore import SolverOptions
from ..states import StateEnsemble
from .heuristics import solve_heuristic_structured, solve_heuristic_toeplitz
from .oracle import outcome_statistics, solve_full_oracle
from .reduced import solve_reduced_dual, solve_reduced_primal
from .types import DiscriminationInstance, SolveReport


def solve_instance(
    inst: DiscriminationInstance,
    ensemble: StateEnsemble | None = None,
    primal: bool = True,
    dual: bool | None = None,
    heuristic: str | None = None,
    opts: SolverOptions | None = None,
) -> SolveReport:
    """Solve the requested programs and gather values, statuses and times.

    Parameters
    ----------
    inst : DiscriminationInstance
    ensemble : StateEnsemble, optional
        When given, the full-dimension oracle is solved as well.
    primal : bool
        Solve the reduced primal.
    dual : bool, optional
        Solve the reduced dual.  Defaults to ``True`` for finite rewards
        without a budget and ``False`` otherwise.
    heuristic : {None, "toeplitz", "toeplitz_general", "1cp", "2cp", "3cp"}
        Restricted dual to solve.  ``toeplitz_general`` marks a Toeplitz
        restriction used outside the change-point setting.
    """
    finite = not inst.reward.has_mask and inst.error_budget is None
    if dual is None:
        dual = finite
    rep = SolveReport(sense=inst.reward.sense)
    if ensemble is not None:
        alpha, _, sol = solve_full_oracle(
            ensemble, inst.reward, inst.error_budget, opts
        )
        rep.alpha = alpha
        rep.statuses["alpha"] = sol.status
        rep.wall_times["alpha"] = sol.raw.solve_time
    if primal:
        p = solve_reduced_primal(inst, opts)
        rep.alpha_prime = p.value
        rep.statuses["alpha_prime"] = p.status
        rep.wall_times["alpha_prime"] = p.wall_time
        if inst.num_guesses >= inst.size:
            rep.statistics = outcome_statistics(W=p.W, priors=inst.priors)
        if p.rank < inst.size:
            rep.notes.append(f"Gram rank {p.rank} < {inst.size}: deflated")
    if dual:
        d = solve_reduced_dual(inst, opts)
        rep.beta_prime = d.value
        rep.statuses["beta_prime"] = d.status
        rep.wall_times["beta_prime"] = d.wall_time
        rep.num_parameters["beta_prime"] = d.num_parameters
        rep.notes += d.notes
    if heuristic is not None:
        h = heuristic.lower()
        if h in ("toeplitz", "toeplitz_general"):
            d = solve_heuristic_toeplitz(inst, opts, changepoint=h == "toeplitz")
        elif h in ("1cp", "2cp", "3cp"):
            d = solve_heuristic_structured(inst, h, opts)
        else:
            raise ValueError(f"unknown heuristic {heuristic!r}")
        rep.beta_double_prime = d.value
        rep.statuses["beta_double_prime"] = d.status
        rep.wall_times["beta_double_prime"] = d.wall_time
        rep.num_parameters["beta_double_prime"] = d.num_parameters
        rep.notes += d.notes
    return rep
