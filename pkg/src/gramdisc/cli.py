"""Command-line experiment runner.

Subcommands
-----------
solve        one instance from a states file or a change-point family
changepoint  sweep over the sequence length N for one configuration
sweep        grid over theta, base and mu (failed points become labeled rows)
estimate     sampled-Gram pipeline over a shot ladder
verify       randomized self-checks with negative controls

Config files are JSON objects whose keys are the fields of
:class:`ExperimentConfig`; command-line flags override them.  Example::

    {"kind": "changepoint", "theta": "pi/4", "num_changes": 1,
     "n_min": 10, "n_max": 40, "n_step": 10, "scheme": "closer_better",
     "base": 0.7071067811865476, "heuristic": "auto", "seed": 0}

States files are JSON objects ``{"dim": d, "states": [[[re, im], ...], ...],
"priors": [...]}`` with ``priors`` optional (uniform by default).

Results are CSV with a ``#`` header block (schema version, config hash and
seed).  With ``--out`` a sidecar ``<out>.config.json`` echoes the resolved
config and ``<out>.timing.csv`` holds wall-clock times, which are kept out
of the main table so reruns reproduce it byte for byte.

Exit codes: 0 success, 1 verify failure, 2 bad config, 3 a solve did not
reach an optimal status (every subcommand except ``sweep``).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import itertools
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .discrim import (
    DiscriminationInstance,
    MaskedInstanceError,
    recover_povm,
    solve_full_oracle,
    solve_heuristic_structured,
    solve_heuristic_toeplitz,
    solve_instance,
    solve_reduced_dual,
    solve_reduced_primal,
)
from .estimate import INFINITE_SHOTS, MODES, estimate_gram
from .gram import (
    GramMatrix,
    GramValidationError,
    gram_2cp,
    gram_3cp,
    gram_changepoint,
    gram_from_ensemble,
    gram_sequences_general,
)
from .rewards import RewardMatrix, build_changepoint_reward, build_reward
from .sdpcore import SolverOptions, recording
from .states import (
    OverlapTable,
    PureState,
    StateEnsemble,
    enumerate_change_indices,
    overlap_table,
    random_state,
    theta_alphabet,
)

SCHEMA_VERSION = 1
KINDS = ("solve", "changepoint", "estimate", "verify", "sweep")
CHANGEPOINT_SCHEMES = ("closer_better", "horseshoe", "min_error")
GENERAL_SCHEMES = (
    "min_error", "exclusion", "unambiguous", "unambiguous_exclusion",
    "horseshoe", "closer_better", "exam",
)
# Largest N solved without --long; the dual at these sizes takes minutes.
DESK_LIMITS = {1: 120, 2: 12, 3: 8}

EXIT_OK, EXIT_SUITE, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 2)."""


def parse_angle(text) -> float:
    """Parse ``0.785``, ``pi``, ``pi/4``, ``3pi/8`` or ``3*pi/8``."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace(" ", "")
    m = re.fullmatch(r"([0-9.]*)\*?pi(?:/([0-9.]+))?", s)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"cannot parse angle {text!r}") from None


def _as_list(v):
    if v is None:
        return []
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _parse_shots(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinite", "oo"):
        return INFINITE_SHOTS
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"bad shot count {v!r}") from None
    if f == INFINITE_SHOTS:
        return f
    if f < 1 or f != int(f):
        raise ConfigError(f"shot count must be a positive integer, got {v!r}")
    return int(f)


@dataclass
class ExperimentConfig:
    """Resolved settings for one CLI run.

    ``theta``, ``base`` and ``mu`` may be lists for ``sweep``; other kinds
    use the first entry.  ``heuristic`` is ``None``, ``"auto"`` (Toeplitz
    for one change point, the structured pattern otherwise), ``"toeplitz"``
    or ``"structured"``.
    """

    kind: str = "solve"
    theta: object = "pi/4"
    num_changes: int = 1
    n_min: Optional[int] = None
    n_max: Optional[int] = None
    n_step: int = 1
    scheme: str = "closer_better"
    base: object = 2**-0.5
    mu: object = 0
    beta: Optional[float] = None
    partial: float = 0.25
    epsilon_budget: Optional[float] = None
    heuristic: Optional[str] = None
    priors: str = "uniform"
    states: Optional[str] = None
    shots: list = field(default_factory=lambda: [1000, 10000, 100000, 1000000])
    trials: int = 20
    estimate_mode: str = "hadamard_full"
    promise: bool = False
    seed: int = 0
    verify_instances: int = 20
    inject: Optional[str] = None
    workers: int = 1
    long: bool = False
    out: Optional[str] = None
    solver: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["shots"] = ["inf" if s == INFINITE_SHOTS else s for s in self.shots]
        return d

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("out", None)
        d.pop("workers", None)
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def thetas(self) -> list:
        return [parse_angle(t) for t in _as_list(self.theta)]

    @property
    def bases(self) -> list:
        return [float(b) for b in _as_list(self.base)]

    @property
    def mus(self) -> list:
        return [int(m) for m in _as_list(self.mu)]

    def n_values(self) -> list:
        lo = self.n_min
        hi = self.n_max if self.n_max is not None else lo
        return list(range(lo, hi + 1, self.n_step))

    def solver_options(self) -> SolverOptions:
        try:
            return SolverOptions(**self.solver)
        except TypeError as exc:
            raise ConfigError(f"bad solver options: {exc}") from None

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}")
        try:
            self.thetas, self.bases, self.mus
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.kind in ("changepoint", "sweep") or (self.kind == "solve" and not self.states):
            if self.num_changes not in (1, 2, 3):
                raise ConfigError("num_changes must be 1, 2 or 3")
            if self.n_min is None:
                raise ConfigError("n_min is required")
            if self.n_min < 1 or self.n_step < 1:
                raise ConfigError("n_min and n_step must be positive")
            if self.n_max is not None and self.n_max < self.n_min:
                raise ConfigError("N range must be nonempty and increasing")
            if self.scheme not in CHANGEPOINT_SCHEMES:
                raise ConfigError(f"change-point scheme must be one of {CHANGEPOINT_SCHEMES}")
            if self.num_changes > 1 and self.scheme == "horseshoe":
                raise ConfigError("horseshoe is defined for one change point")
            limit = DESK_LIMITS[self.num_changes]
            if max(self.n_values()) > limit and not self.long:
                raise ConfigError(
                    f"N > {limit} with {self.num_changes} change point(s) needs --long"
                )
        elif self.kind == "solve" and self.scheme not in GENERAL_SCHEMES:
            raise ConfigError(f"scheme must be one of {GENERAL_SCHEMES}")
        if any(b < 0 for b in self.bases) or any(m < 0 for m in self.mus):
            raise ConfigError("base and mu must be nonnegative")
        if self.epsilon_budget is not None and not 0 <= self.epsilon_budget <= 1:
            raise ConfigError("epsilon_budget must lie in [0, 1]")
        if self.heuristic not in (None, "auto", "toeplitz", "structured"):
            raise ConfigError("heuristic must be auto, toeplitz or structured")
        if self.priors != "uniform":
            raise ConfigError("only uniform priors are supported from the CLI")
        if self.estimate_mode not in MODES:
            raise ConfigError(f"estimate_mode must be one of {MODES}")
        if self.estimate_mode == "swap_nonneg" and not self.promise:
            raise ConfigError("swap_nonneg mode needs --promise (nonnegative overlaps)")
        self.shots = [_parse_shots(s) for s in _as_list(self.shots)]
        if self.kind == "estimate" and (not self.shots or self.trials < 1):
            raise ConfigError("estimate needs a shot ladder and trials >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        self.solver_options()
        return self


# ----------------------------------------------------------------- inputs


def load_states(path: str) -> StateEnsemble:
    """Read a states file (see module docstring)."""
    try:
        with open(path) as fh:
            data = json.load(fh)
        d = int(data["dim"])
        states = []
        for amps in data["states"]:
            v = np.array([complex(re_, im_) for re_, im_ in amps])
            if v.size != d:
                raise ConfigError(f"state of length {v.size} in a dim-{d} file")
            states.append(PureState(v))
        priors = data.get("priors")
    except (OSError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot read states file {path!r}: {exc}") from None
    if priors is None:
        return StateEnsemble.uniform(states)
    return StateEnsemble(tuple(states), priors)


def dump_states(e: StateEnsemble) -> str:
    return json.dumps({
        "dim": e.dim,
        "states": [[[float(z.real), float(z.imag)] for z in s.amplitudes] for s in e.states],
        "priors": [float(q) for q in e.priors],
    })


def _general_reward(cfg: ExperimentConfig, n: int) -> RewardMatrix:
    params = {}
    if cfg.scheme == "unambiguous" and cfg.beta is not None:
        params["beta"] = cfg.beta
    if cfg.scheme == "horseshoe":
        params["mu"] = cfg.mus[0]
    if cfg.scheme == "closer_better":
        params["gamma"] = cfg.bases[0]
    if cfg.scheme == "exam":
        params["partial"] = cfg.partial
    return build_reward(cfg.scheme, n, **params)


def changepoint_instance(theta, P, N, scheme, base, mu):
    table = overlap_table(theta_alphabet(theta, P))
    G = gram_changepoint(table, N)
    r = build_changepoint_reward(scheme, N, P, base=base, mu=mu)
    return DiscriminationInstance.uniform(G, r)


def _heuristic_kind(h, P):
    if h is None:
        return None
    if h == "toeplitz" or (h == "auto" and P == 1):
        return "toeplitz"
    return f"{P}cp"


# --------------------------------------------------------------- writers


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.12g}"
    return str(v)


def write_table(rows, columns, cfg, schema, stream):
    stream.write(f"# gramdisc {__version__}\n")
    stream.write(f"# schema: {schema}/{SCHEMA_VERSION}\n")
    stream.write(f"# config_hash: {cfg.config_hash()}\n")
    stream.write(f"# seed: {cfg.seed}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])


def _emit(rows, columns, timing, cfg, schema):
    if cfg.out is None:
        write_table(rows, columns, cfg, schema, sys.stdout)
        return
    with open(cfg.out, "w", newline="") as fh:
        write_table(rows, columns, cfg, schema, fh)
    with open(cfg.out + ".config.json", "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if timing:
        keys = sorted({k for t in timing for k in t})
        with open(cfg.out + ".timing.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
            w.writeheader()
            for t in timing:
                w.writerow({k: (f"{v:.3f}" if k.endswith("_seconds") else _fmt(v))
                            for k, v in t.items()})


# ------------------------------------------------------------ changepoint

CHANGEPOINT_COLUMNS = [
    "N", "P", "theta", "scheme", "base", "mu", "size", "beta_prime",
    "beta_double_prime", "gap", "status_dual", "status_heuristic",
    "params_dual", "params_heuristic", "status",
]


def _changepoint_point(job):
    theta, P, N, scheme, base, mu, heuristic, solver = job
    opts = SolverOptions(**solver)
    row = {"N": N, "P": P, "theta": theta, "scheme": scheme, "base": base, "mu": mu}
    timing = {"N": N, "theta": theta, "base": base, "mu": mu}
    try:
        inst = changepoint_instance(theta, P, N, scheme, base, mu)
        row["size"] = inst.size
        d = solve_reduced_dual(inst, opts, symmetry="auto")
        row.update(beta_prime=d.value, status_dual=str(d.status), params_dual=d.num_parameters)
        timing["dual_seconds"] = d.wall_time
        ok = d.status == "optimal"
        kind = _heuristic_kind(heuristic, P)
        if kind is not None:
            h = (solve_heuristic_toeplitz(inst, opts) if kind == "toeplitz"
                 else solve_heuristic_structured(inst, kind, opts))
            row.update(beta_double_prime=h.value, status_heuristic=str(h.status),
                       params_heuristic=h.num_parameters)
            timing["heuristic_seconds"] = h.wall_time
            ok = ok and h.status == "optimal"
            if ok:
                row["gap"] = h.value - d.value
        row["status"] = "optimal" if ok else "failed"
    except Exception as exc:  # a failed point is a labeled row
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    # failed solves never report a value
    if row.get("status_dual") not in (None, "optimal"):
        row["beta_prime"] = None
    if row.get("status_heuristic") not in (None, "optimal"):
        row["beta_double_prime"] = None
    return row, timing


def _run_jobs(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves job order whatever the completion order
        return list(pool.map(fn, jobs))


def run_changepoint_sweep(cfg: ExperimentConfig):
    """Solve the dual (and optionally a heuristic) for every grid point.

    Returns ``(rows, timing)`` ordered by theta, base, mu, then N.
    """
    jobs = [
        (theta, cfg.num_changes, N, cfg.scheme, base, mu, cfg.heuristic, dict(cfg.solver))
        for theta, base, mu in itertools.product(cfg.thetas, cfg.bases, cfg.mus)
        for N in cfg.n_values()
    ]
    out = _run_jobs(_changepoint_point, jobs, cfg.workers)
    return [r for r, _ in out], [t for _, t in out]


# ---------------------------------------------------------------- estimate

ESTIMATE_COLUMNS = [
    "shots", "trial", "seed", "alpha_true", "alpha_est", "abs_error",
    "correction", "status",
]


def _estimate_source(cfg):
    if cfg.states:
        return load_states(cfg.states)
    return StateEnsemble.uniform(theta_alphabet(cfg.thetas[0], cfg.num_changes))


def run_estimate_pipeline(cfg: ExperimentConfig):
    """Estimate the Gram at each shot count, repair, solve and compare.

    The ensemble is the states file, or else the alphabet of the first
    ``theta`` with ``num_changes + 1`` symbols (``pi/4`` with one change
    gives the pair ``|0>, |+>``).  Trial ``t`` uses seed ``cfg.seed + t``.
    """
    opts = cfg.solver_options()
    e = _estimate_source(cfg)
    r = _general_reward(cfg, e.size)
    G = gram_from_ensemble(e)
    true = solve_reduced_primal(DiscriminationInstance(G, e.priors, r, cfg.epsilon_budget), opts)
    rows = []
    for shots in cfg.shots:
        trials = 1 if shots == INFINITE_SHOTS else cfg.trials
        for t in range(trials):
            seed = cfg.seed + t
            row = {"shots": "inf" if shots == INFINITE_SHOTS else shots, "trial": t,
                   "seed": seed, "alpha_true": true.value}
            eg = estimate_gram(e, cfg.estimate_mode, shots=shots, seed=seed, promise=cfg.promise)
            sol = solve_reduced_primal(
                DiscriminationInstance(eg.repaired, e.priors, r, cfg.epsilon_budget), opts
            )
            row["correction"] = eg.correction
            ok = sol.status == "optimal" and true.status == "optimal"
            row["status"] = "optimal" if ok else f"failed: {sol.status}"
            if ok:
                row["alpha_est"] = sol.value
                row["abs_error"] = abs(sol.value - true.value)
            rows.append(row)
    return rows


# ------------------------------------------------------------------ verify


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _random_instance(rng, d_max=8, n_max=6):
    N = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    L = int(rng.integers(1, N + 2))
    e = StateEnsemble(
        tuple(random_state(d, rng) for _ in range(N)),
        rng.dirichlet(np.ones(N)),
    )
    r = RewardMatrix(rng.uniform(-1, 1, size=(L, N)))
    return e, r


def random_nonnegative_table(rng, size: int, dim: int = 4) -> OverlapTable:
    """Overlaps of random real states with nonnegative amplitudes."""
    v = rng.uniform(0, 1, size=(dim, size))
    v /= np.linalg.norm(v, axis=0)
    t = v.T @ v
    np.fill_diagonal(t, 1.0)
    return OverlapTable(t)


def _certificate_failures(sols) -> list:
    bad = []
    for s in sols:
        if s.status != "optimal":
            continue
        c = s.certificate()
        if (c["primal_residual"] > 1e-8 or c["dual_residual"] > 1e-8
                or c["gap"] > 1e-8
                or c["complementarity"] > 1e-7 * (1 + abs(s.primal_value))):
            bad.append(c)
    return bad


def run_verify(cfg: ExperimentConfig) -> list:
    """Randomized equivalence, duality, dominance and builder checks plus
    negative controls.  ``cfg.inject = "non_psd"`` corrupts a Gram matrix
    so that the PSD check fails, which exercises the failure path."""
    opts = cfg.solver_options()
    rng = np.random.default_rng(cfg.seed)
    out = []
    with recording() as sols:
        worst_eq = worst_dual = 0.0
        povm_bad = 0
        for _ in range(cfg.verify_instances):
            e, r = _random_instance(rng)
            alpha, _, osol = solve_full_oracle(e, r, opts=opts)
            inst = DiscriminationInstance(gram_from_ensemble(e), e.priors, r)
            p = solve_reduced_primal(inst, opts)
            d = solve_reduced_dual(inst, opts)
            if "optimal" in (osol.status, p.status) and osol.status == p.status:
                worst_eq = max(worst_eq, abs(alpha - p.value))
            if p.status == "optimal" and d.status == "optimal":
                worst_dual = max(worst_dual, abs(p.value - d.value))
            if p.status == "optimal":
                povm = recover_povm(p, e)
                psi = e.state_matrix
                lhs = np.array([np.real(np.einsum("aj,ab,bj->j", psi.conj(), m, psi))
                                for m in povm.M])
                rhs = np.array([np.real(np.diag(w)) for w in p.W])
                if povm.violations() or np.abs(lhs - rhs).max() > 1e-7:
                    povm_bad += 1
        out.append(CheckResult("oracle_equivalence", worst_eq <= 1e-6, f"max |a - a'| = {worst_eq:.2e}"))
        out.append(CheckResult("strong_duality", worst_dual <= 1e-6, f"max |a' - b'| = {worst_dual:.2e}"))
        out.append(CheckResult("povm_recovery", povm_bad == 0, f"{povm_bad} failures"))

        worst_dom = math.inf
        for P, N in [(1, 3), (1, 6), (2, 4), (3, 4)]:
            inst = changepoint_instance(math.pi / 4, P, N, "closer_better", 2**-0.5, 0)
            d = solve_reduced_dual(inst, opts)
            h = (solve_heuristic_toeplitz(inst, opts) if P == 1
                 else solve_heuristic_structured(inst, P, opts))
            worst_dom = min(worst_dom, h.value - d.value)
        out.append(CheckResult("heuristic_dominance", worst_dom >= -1e-7,
                               f"min b'' - b' = {worst_dom:.2e}"))
    bad = _certificate_failures(sols)
    out.append(CheckResult("solver_certificates", not bad,
                           f"{len(sols)} solves, {len(bad)} bad certificates"))

    worst_b = 0.0
    for _ in range(5):
        t3 = random_nonnegative_table(rng, 4)
        t2 = OverlapTable(t3.values[:3, :3])
        for N in range(1, 6):
            worst_b = max(
                worst_b,
                np.abs(gram_2cp(t2, N).entries
                       - gram_sequences_general(t2, enumerate_change_indices(N, 2)).entries).max(),
                np.abs(gram_3cp(t3, N).entries
                       - gram_sequences_general(t3, enumerate_change_indices(N, 3)).entries).max(),
            )
    out.append(CheckResult("gram_cross_builder", worst_b <= 1e-12, f"max diff = {worst_b:.2e}"))

    # negative controls: each must raise its typed error
    try:
        GramMatrix([[1.0, 1.1], [1.1, 1.0]])
        out.append(CheckResult("control_rejects_non_psd", False, "accepted"))
    except GramValidationError as exc:
        out.append(CheckResult("control_rejects_non_psd", "psd" in str(exc), str(exc)))
    try:
        inst = DiscriminationInstance.uniform(GramMatrix(np.eye(2)), build_reward("unambiguous", 2))
        solve_reduced_dual(inst, opts)
        out.append(CheckResult("control_masked_dual_refused", False, "dual accepted a mask"))
    except MaskedInstanceError:
        out.append(CheckResult("control_masked_dual_refused", True, "MaskedInstanceError"))

    if cfg.inject == "non_psd":
        g = np.array(gram_changepoint(overlap_table(theta_alphabet(math.pi / 4, 1)), 4).entries)
        g[0, -1] = g[-1, 0] = -0.99
        try:
            GramMatrix(g)
            out.append(CheckResult("gram_psd", True, "corrupted Gram passed"))
        except GramValidationError as exc:
            out.append(CheckResult("gram_psd", False, str(exc)))
    elif cfg.inject is not None:
        raise ConfigError(f"unknown injection {cfg.inject!r}")
    return out


# ------------------------------------------------------------------- solve


def run_solve(cfg: ExperimentConfig):
    opts = cfg.solver_options()
    if cfg.states:
        e = load_states(cfg.states)
        r = _general_reward(cfg, e.size)
        inst = DiscriminationInstance(gram_from_ensemble(e), e.priors, r, cfg.epsilon_budget)
        heuristic = "toeplitz_general" if cfg.heuristic else None
        rep = solve_instance(inst, ensemble=e, heuristic=heuristic, opts=opts)
    else:
        P = cfg.num_changes
        inst = changepoint_instance(cfg.thetas[0], P, cfg.n_min, cfg.scheme,
                                    cfg.bases[0], cfg.mus[0])
        if cfg.epsilon_budget is not None:
            inst = DiscriminationInstance(inst.gram, inst.priors, inst.reward, cfg.epsilon_budget)
        rep = solve_instance(inst, heuristic=_heuristic_kind(cfg.heuristic, P), opts=opts)
    return rep


# --------------------------------------------------------------------- CLI


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--theta", nargs="+", help="alphabet angle(s), e.g. pi/4")
    common.add_argument("--num-changes", type=int, dest="num_changes")
    common.add_argument("--n-min", type=int, dest="n_min")
    common.add_argument("--n-max", type=int, dest="n_max")
    common.add_argument("--n-step", type=int, dest="n_step")
    common.add_argument("--scheme")
    common.add_argument("--base", nargs="+", type=float)
    common.add_argument("--mu", nargs="+", type=int)
    common.add_argument("--beta", type=float)
    common.add_argument("--epsilon-budget", type=float, dest="epsilon_budget")
    common.add_argument("--heuristic", nargs="?", const="auto",
                        choices=["auto", "toeplitz", "structured"])
    common.add_argument("--states", help="JSON states file")
    common.add_argument("--shots", nargs="+", help="shot ladder; 'inf' for exact")
    common.add_argument("--trials", type=int)
    common.add_argument("--mode", dest="estimate_mode", choices=list(MODES))
    common.add_argument("--promise", action="store_true", default=None,
                        help="assert nonnegative overlaps (swap mode)")
    common.add_argument("--seed", type=int)
    common.add_argument("--instances", type=int, dest="verify_instances")
    common.add_argument("--inject", choices=["non_psd"])
    common.add_argument("--workers", type=int)
    common.add_argument("--long", action="store_true", default=None)
    common.add_argument("--out")

    parser = argparse.ArgumentParser(prog="gramdisc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind, text in [
        ("solve", "solve one instance"),
        ("changepoint", "sweep N for a change-point family"),
        ("sweep", "grid over theta, base and mu"),
        ("estimate", "sampled-Gram pipeline"),
        ("verify", "randomized self-checks"),
    ]:
        sub.add_parser(kind, parents=[common], help=text)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data["kind"] = args.kind
    for key, val in vars(args).items():
        if key in ("config", "kind") or val is None:
            continue
        data[key] = val
    return ExperimentConfig.from_dict(data).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if cfg.kind == "verify":
            results = run_verify(cfg)
            for r in results:
                print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
            if cfg.out:
                with open(cfg.out, "w") as fh:
                    json.dump([dataclasses.asdict(r) for r in results], fh, indent=2)
            return EXIT_OK if all(r.passed for r in results) else EXIT_SUITE
        if cfg.kind == "solve":
            rep = run_solve(cfg)
            text = rep.dumps()
            if cfg.out:
                with open(cfg.out, "w") as fh:
                    fh.write(text + "\n")
            else:
                print(text)
            ok = all(str(s) == "optimal" for s in rep.statuses.values())
            return EXIT_OK if ok else EXIT_SOLVER
        if cfg.kind in ("changepoint", "sweep"):
            rows, timing = run_changepoint_sweep(cfg)
            _emit(rows, CHANGEPOINT_COLUMNS, timing, cfg, "changepoint")
            ok = all(r["status"] == "optimal" for r in rows)
            return EXIT_OK if ok or cfg.kind == "sweep" else EXIT_SOLVER
        rows = run_estimate_pipeline(cfg)
        _emit(rows, ESTIMATE_COLUMNS, None, cfg, "estimate")
        ok = all(r["status"] == "optimal" for r in rows)
        return EXIT_OK if ok else EXIT_SOLVER
    except ConfigError as exc:
        print(f"gramdisc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
