"""Experiment harness: configuration, Monte Carlo campaigns, bound sweeps,
oracle replays, and CSV/JSON result emission.

Output is byte-deterministic for a fixed (config, seed), including under
parallel execution: every trial's random substream is derived from
(seed, n, trial_index), and aggregation merges integer counters only.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import bounds as bd
from . import protocol as proto
from . import reference
from .bitlinalg import ERASED, BitMatrix, DecodeStatus, ErasedVector, solve_erased
from .topology import GraphTopology

CSV_SCHEMA_VERSION = "1"
CSV_COLUMNS = (
    "n", "scheme", "trials", "failures", "p_hat", "ci_low", "ci_high",
    "mean_energy", "mean_edges", "t", "bound_sum", "bound_closed",
    "bound_naive", "lower_energy", "flags",
)


class ConfigError(ValueError):
    """Invalid configuration or usage; maps to exit code 1."""


@dataclass
class ExperimentConfig:
    """Every free constant of the model plus campaign controls.

    p_tar and d_cap feed the bound columns; when left unset they default,
    per n, to n**-0.5 and 2*c*n*ln(n).  e_cap (sparseness-bound energy cap)
    defaults to the realized scheme energy.  t is normally derived; an
    explicit value is required for noiseless (epsilon = 0) gc3 runs.
    """

    scheme: str = "gc3"
    n_list: List[int] = field(default_factory=lambda: [64])
    epsilon: float = 0.1
    c: float = 4.0
    c_prime: float = 2.0
    p_ch: float = 0.05
    eta: float = 0.01
    e1: float = 1.0
    e2: float = 1.0
    trials: int = 1000
    seed: int = 0
    fixed_graph: bool = False
    p_tar: Optional[float] = None
    d_cap: Optional[float] = None
    e_cap: Optional[float] = None
    t: Optional[int] = None
    workers: int = 1

    def validate(self) -> None:
        if self.scheme not in ("gc3", "naive"):
            raise ConfigError(f"scheme must be gc3 or naive, got {self.scheme!r}")
        if not self.n_list:
            raise ConfigError("n_list must not be empty")
        if any(n < 2 for n in self.n_list):
            raise ConfigError("every n must be at least 2")
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError("epsilon must lie in [0, 1)")
        if self.c <= 0.0:
            raise ConfigError("c must be positive")
        if not 0.0 < self.p_ch < 0.5:
            raise ConfigError("p_ch must lie in (0, 1/2)")
        if self.eta <= 0.0:
            raise ConfigError("eta must be positive")
        if self.e1 < 0.0 or self.e2 < 0.0:
            raise ConfigError("e1 and e2 must be nonnegative")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.p_tar is not None and not 0.0 < self.p_tar < 1.0:
            raise ConfigError("p_tar must lie in (0, 1)")
        if self.t is not None and self.t < 1:
            raise ConfigError("t must be at least 1")
        if self.scheme == "gc3" and self.epsilon == 0.0 and self.t is None:
            raise ConfigError("epsilon=0 needs an explicit t (pass --t)")

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**raw)

    def replace(self, **overrides) -> "ExperimentConfig":
        return dataclasses.replace(self, **overrides)


@dataclass
class ResultRow:
    """One output row; None renders as an empty CSV cell, always paired
    with a named token in flags."""

    n: int
    scheme: str
    trials: Optional[int] = None
    failures: Optional[int] = None
    p_hat: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    mean_energy: Optional[float] = None
    mean_edges: Optional[float] = None
    t: Optional[int] = None
    bound_sum: Optional[float] = None
    bound_closed: Optional[float] = None
    bound_naive: Optional[float] = None
    lower_energy: Optional[float] = None
    flags: str = ""


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def emit_csv(rows: Sequence[ResultRow], fh) -> None:
    fh.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(getattr(row, col)) for col in CSV_COLUMNS) + "\n")


def emit_json(rows: Sequence[ResultRow], fh) -> None:
    payload = {
        "schema_version": CSV_SCHEMA_VERSION,
        "rows": [{col: getattr(row, col) for col in CSV_COLUMNS} for row in rows],
    }
    json.dump(payload, fh, indent=2, sort_keys=True)
    fh.write("\n")


def _collect_report(report: bd.BoundReport, prefix: str, flags: List[str]):
    """Value of a bound report, recording named flags for failures."""
    for name in report.failed_names():
        flags.append(f"{prefix}:{name}")
    if report.vacuous:
        flags.append(f"{prefix}:vacuous")
    return report.value


def _bound_columns(config: ExperimentConfig, n: int, upper_energy: Optional[float]):
    """Evaluate all four bound columns for one n, with named flags."""
    flags: List[str] = []
    up = bd.UpperBoundInputs(n=n, c=config.c, eta=config.eta,
                             epsilon=config.epsilon, p_ch=config.p_ch)
    bound_sum = _collect_report(bd.ensemble_error_upper_sum(up), "sum", flags)
    bound_closed = _collect_report(bd.ensemble_error_upper_closed(up), "closed", flags)
    bound_naive = _collect_report(
        bd.naive_error_upper(n, config.c_prime, config.epsilon), "naive", flags)
    p_tar = config.p_tar if config.p_tar is not None else n**-0.5
    d_cap = config.d_cap if config.d_cap is not None else 2.0 * config.c * n * math.log(n)
    e_cap = config.e_cap if config.e_cap is not None else upper_energy
    lower_energy = None
    try:
        low_in = bd.LowerBoundInputs(n=n, e1=config.e1, e2=config.e2, d_cap=d_cap,
                                     e_cap=e_cap if e_cap else 1.0,
                                     epsilon=config.epsilon, p_tar=p_tar)
        lower_energy = _collect_report(bd.energy_lower_bound(low_in), "lower", flags)
    except ValueError:
        flags.append("lower:invalid_params")
    return bound_sum, bound_closed, bound_naive, lower_energy, flags


def _scheme_params(config: ExperimentConfig, n: int) -> proto.SchemeParams:
    t = config.t
    if config.scheme == "naive" and t is None:
        t = 1  # placeholder; the naive scheme derives its own repeat count
    return proto.SchemeParams.derive(n, config.epsilon, config.c, config.p_ch,
                                     config.e1, config.e2, t=t)


def cmd_simulate(config: ExperimentConfig):
    """Monte Carlo campaign: one row per n, with bound columns attached."""
    config.validate()
    for n in config.n_list:
        try:
            params = _scheme_params(config, n)
            if config.scheme == "gc3":
                params.ensemble()  # fail fast when c*ln(n)/n exceeds 1
        except ValueError as exc:
            raise ConfigError(f"n={n}: {exc}") from exc
        est = proto.estimate_error_probability(
            config.scheme, params, config.trials, config.seed,
            c_prime=config.c_prime, fixed_graph=config.fixed_graph,
            workers=config.workers)
        upper_energy = 2.0 * n * config.e1 + n * params.t * config.e2
        bound_sum, bound_closed, bound_naive, lower_energy, flags = \
            _bound_columns(config, n, upper_energy)
        yield ResultRow(
            n=n, scheme=config.scheme, trials=est.trials, failures=est.failures,
            p_hat=est.p_hat, ci_low=est.ci_low, ci_high=est.ci_high,
            mean_energy=est.mean_energy, mean_edges=est.mean_edges, t=est.t_used,
            bound_sum=bound_sum, bound_closed=bound_closed,
            bound_naive=bound_naive, lower_energy=lower_energy,
            flags=";".join(flags))


def cmd_bounds(config: ExperimentConfig):
    """Pure formula sweep over n_list; no simulation columns."""
    config.validate()
    for n in config.n_list:
        t = None
        flags_extra: List[str] = []
        try:
            t = _scheme_params(config, n).t
            upper_energy = 2.0 * n * config.e1 + n * t * config.e2
        except ValueError:
            upper_energy = None
            flags_extra.append("t:underivable")
        bound_sum, bound_closed, bound_naive, lower_energy, flags = \
            _bound_columns(config, n, upper_energy)
        yield ResultRow(
            n=n, scheme=config.scheme, t=t,
            bound_sum=bound_sum, bound_closed=bound_closed,
            bound_naive=bound_naive, lower_energy=lower_energy,
            flags=";".join(flags_extra + flags))


@dataclass
class SweepSummary:
    """Trend verdicts over a strictly increasing n sweep."""

    monotone_within_ci: bool
    slope: Optional[float]
    slope_stderr: Optional[float]
    fit_points: int

    def describe(self) -> str:
        mono = "yes" if self.monotone_within_ci else "NO"
        if self.slope is None:
            fit = "log-log slope undefined (fewer than 3 nonzero estimates)"
        else:
            fit = (f"log-log slope {self.slope:.4f} "
                   f"+/- {self.slope_stderr:.4f} over {self.fit_points} points")
        return f"p_hat nonincreasing within CI: {mono}; {fit}"


def summarize_sweep(rows: Sequence[ResultRow]) -> SweepSummary:
    monotone = True
    for prev, cur in zip(rows, rows[1:]):
        if cur.p_hat <= prev.p_hat:
            continue
        overlap = max(prev.ci_low, cur.ci_low) <= min(prev.ci_high, cur.ci_high)
        if not overlap:
            monotone = False
    pts = [(math.log(r.n), math.log(r.p_hat)) for r in rows if r.failures > 0]
    if len(pts) < 3:
        return SweepSummary(monotone, None, None, len(pts))
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    sxx = float(np.sum((xs - xs.mean()) ** 2))
    slope = float(np.sum((xs - xs.mean()) * (ys - ys.mean())) / sxx)
    intercept = float(ys.mean() - slope * xs.mean())
    resid = ys - (intercept + slope * xs)
    dof = len(pts) - 2
    stderr = float(math.sqrt(float(np.sum(resid**2)) / dof / sxx)) if dof > 0 else float("nan")
    return SweepSummary(monotone, slope, stderr, len(pts))


def cmd_sweep(config: ExperimentConfig):
    """Simulate across n_list and attach trend verdicts.

    Requires a strictly increasing n_list with at least 3 entries.
    """
    config.validate()
    if len(config.n_list) < 3:
        raise ConfigError("sweep needs at least 3 values of n")
    if any(b <= a for a, b in zip(config.n_list, config.n_list[1:])):
        raise ConfigError("sweep needs a strictly increasing n_list")
    rows = list(cmd_simulate(config))
    return rows, summarize_sweep(rows)


# ---------------------------------------------------------------------------
# Oracle checks


@dataclass
class OracleReport:
    cases: int
    passes: int
    mismatches: List[dict]
    case_paths: List[str]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _status_name(status: DecodeStatus) -> str:
    return status.value


def _case_record(n, g, pattern, x, expected, observed, kind) -> dict:
    return {
        "n": n,
        "kind": kind,
        "adjacency": [[int(i), int(j)] for i, j in g.edges()],
        "edge_erased": [[int(i), int(j)] for i, j in zip(*np.nonzero(pattern.edge_erased))],
        "sink_erased": [int(i) for i in np.nonzero(pattern.sink_erased)[0]],
        "x": [int(b) for b in x],
        "expected": expected,
        "observed": observed,
    }


def _rebuild_case(record):
    n = record["n"]
    g = GraphTopology.from_edges(n, [tuple(e) for e in record["adjacency"]])
    edge_erased = np.zeros((n, n), dtype=bool)
    for i, j in record["edge_erased"]:
        edge_erased[i, j] = True
    sink_erased = np.zeros(2 * n, dtype=bool)
    sink_erased[record["sink_erased"]] = True
    x = np.array(record["x"], dtype=np.uint8)
    return g, proto.ErasurePattern(edge_erased, sink_erased), x


def _generator_matrix(g: GraphTopology) -> BitMatrix:
    return BitMatrix.hstack(BitMatrix.identity(g.n), g.adjacency_matrix())


def _evaluate_case(g: GraphTopology, pattern: proto.ErasurePattern, x: np.ndarray,
                   params: proto.SchemeParams):
    """Run one (graph, pattern) case through every route.

    Returns (observed dict, problems list).  Routes compared: the packed
    solver on the full generator matrix, the production decode, the
    independent dense-rank oracle, and a replay of the pattern against all
    2^n inputs (decode status must not depend on the input, and every
    unique decode must return the true input).
    """
    n = g.n
    adj = g.dense()
    y = proto.local_parities(adj, x, pattern.edge_erased)
    r = proto.sink_observation(x, y, pattern.sink_erased)
    gen = _generator_matrix(g)
    solve_status = solve_erased(gen, ErasedVector(r)).status
    trial = proto.trial_from_pattern(g, x, params, pattern)
    oracle_unique = reference.unique_by_rank(gen.to_dense().tolist(),
                                             (r != ERASED).tolist())
    problems = []
    expected = "unique" if oracle_unique else "ambiguous"
    if _status_name(solve_status) != expected:
        problems.append("solver_vs_rank_oracle")
    if _status_name(trial.status) != _status_name(solve_status):
        problems.append("decode_vs_solver")
    replay_ok = True
    for value in range(2**n):
        probe = np.array([(value >> i) & 1 for i in range(n)], dtype=np.uint8)
        out = proto.trial_from_pattern(g, probe, params, pattern)
        if out.status is not solve_status:
            replay_ok = False
        if out.status is DecodeStatus.UNIQUE and not out.correct:
            replay_ok = False
    if not replay_ok:
        problems.append("input_dependence")
    observed = {
        "solve_status": _status_name(solve_status),
        "trial_status": _status_name(trial.status),
        "rank_oracle": expected,
        "replay_ok": replay_ok,
    }
    return expected, observed, problems


def cmd_oracle_check(n_max: int, cases: int, seed: int,
                     out_dir: Optional[str] = None) -> OracleReport:
    """Randomized cross-checks of the decoder at exhaustively checkable sizes.

    For `cases` random (graph, erasure pattern) pairs at each n <= n_max:
    the decode status must match the independent rank oracle, and replaying
    the pattern against all 2^n inputs must give an identical status with
    the true input recovered whenever it is unique.  Mismatching cases are
    serialized for replay.
    """
    if not 1 <= n_max <= 10:
        raise ConfigError("n_max must lie in 1..10 (exhaustive input domain)")
    if cases < 1:
        raise ConfigError("cases must be at least 1")
    total = 0
    passes = 0
    mismatches = []
    case_paths = []
    for n in range(1, n_max + 1):
        params = proto.SchemeParams(n=n, epsilon=0.5, c=1.0, p_ch=0.1,
                                    e1=1.0, e2=1.0, t=1)
        for case in range(cases):
            rng = proto._trial_rng(seed, n, case)
            g = GraphTopology.from_dense((rng.random((n, n)) < rng.uniform(0.2, 0.8)).astype(np.uint8))
            edge_q = rng.uniform(0.0, 1.0)
            sink_q = rng.uniform(0.0, 1.0)
            edge_erased = g.dense().astype(bool) & (rng.random((n, n)) < edge_q)
            sink_erased = rng.random(2 * n) < sink_q
            pattern = proto.ErasurePattern(edge_erased, sink_erased)
            x = rng.integers(0, 2, n, dtype=np.uint8)
            expected, observed, problems = _evaluate_case(g, pattern, x, params)
            total += 1
            if not problems:
                passes += 1
                continue
            record = _case_record(n, g, pattern, x, expected, observed,
                                  kind=";".join(problems))
            mismatches.append(record)
            if out_dir is not None:
                os.makedirs(out_dir, exist_ok=True)
                path = os.path.join(out_dir, f"mismatch_n{n}_case{case}.json")
                with open(path, "w", encoding="utf-8") as fh:
                    json.dump(record, fh, indent=2, sort_keys=True)
                case_paths.append(path)
    return OracleReport(total, passes, mismatches, case_paths)


def replay_case(path: str) -> dict:
    """Re-run a serialized case; deterministic, so a failing case keeps
    failing the same way."""
    with open(path, "r", encoding="utf-8") as fh:
        record = json.load(fh)
    g, pattern, x = _rebuild_case(record)
    params = proto.SchemeParams(n=g.n, epsilon=0.5, c=1.0, p_ch=0.1,
                                e1=1.0, e2=1.0, t=1)
    expected, observed, problems = _evaluate_case(g, pattern, x, params)
    stored_expected = record.get("expected")
    match = not problems and stored_expected == expected
    return {
        "match": match,
        "problems": problems,
        "stored_expected": stored_expected,
        "recomputed_expected": expected,
        "observed": observed,
    }
