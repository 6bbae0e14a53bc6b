"""Two-step in-network coding scheme, naive repetition baseline, and energy
accounting.

Step 1: every agent broadcasts its own bit t times over its out-edges; each
agent whose in-neighborhood arrived intact computes the XOR of the received
bits, otherwise its local parity is erased.  Step 2: every agent sends its
own bit and its local parity to the sink once each.  The sink decodes the
resulting length-2n observation of x^T [I, A] by Gaussian elimination.

Per-edge erasures after t rounds are Bernoulli(epsilon**t) and per-position
sink erasures are Bernoulli(epsilon); trials draw those indicators directly,
which is distributionally identical to simulating every repetition.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bitlinalg import (
    ERASED,
    DecodeStatus,
    ErasedVector,
    InconsistentSystemError,
    solve_unique,
)
from .topology import EnsembleParams, GraphTopology, edge_count, sample_er

#: Reserved substream index for the shared graph in fixed-graph campaigns.
_GRAPH_STREAM = 2**62

_WILSON_Z = 1.959963984540054  # two-sided 95%


def compute_t(n: int, epsilon: float, c: float, p_ch: float) -> int:
    """Broadcast rounds needed to push per-edge erasure below p_ch/(c ln n).

    Returns the smallest integer t >= 1 with epsilon**t <= p_ch/(c*ln(n)),
    i.e. ceil(ln(c*ln(n)/p_ch) / ln(1/epsilon)); the ceiling is resolved by
    direct power comparison so float noise in the log quotient cannot shift
    exactly-integral cases.

    Raises:
        ValueError: epsilon is 0 (pass an explicit t for noiseless runs)
            or 1, or c*ln(n) <= p_ch.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie strictly between 0 and 1; "
                         "noiseless runs must pass an explicit t")
    cln = c * math.log(n)
    if cln <= p_ch:
        raise ValueError("c*ln(n) must exceed p_ch")
    target = p_ch / cln
    t = max(1, math.ceil(math.log(cln / p_ch) / math.log(1.0 / epsilon)))
    while t > 1 and epsilon ** (t - 1) <= target:
        t -= 1
    while epsilon**t > target:
        t += 1
    return t


def naive_repeats(n: int, c_prime: float, epsilon: float) -> int:
    """Per-agent repetitions for the baseline: smallest t' >= 1 with
    epsilon**t' <= n**(-c_prime), i.e. ceil(c_prime*ln(n)/ln(1/epsilon))."""
    if c_prime * math.log(n) < 1.0:
        raise ValueError("c_prime*ln(n) must be at least 1")
    if epsilon == 0.0:
        return 1
    target = n ** (-c_prime)
    t = max(1, math.ceil(c_prime * math.log(n) / math.log(1.0 / epsilon)))
    while t > 1 and epsilon ** (t - 1) <= target:
        t -= 1
    while epsilon**t > target:
        t += 1
    return t


@dataclass(frozen=True)
class SchemeParams:
    """All scheme constants: agent count, channel, ensemble constant c,
    per-bit budget p_ch, energies, and the broadcast round count t."""

    n: int
    epsilon: float
    c: float
    p_ch: float
    e1: float
    e2: float
    t: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one agent")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.c <= 0.0:
            raise ValueError("c must be positive")
        if not 0.0 < self.p_ch < 0.5:
            raise ValueError("p_ch must lie in (0, 1/2)")
        if self.e1 < 0.0 or self.e2 < 0.0:
            raise ValueError("energies must be nonnegative")
        if self.t < 1:
            raise ValueError("need at least one broadcast round")

    @classmethod
    def derive(cls, n, epsilon, c, p_ch, e1, e2, t: Optional[int] = None) -> "SchemeParams":
        """Build params, deriving t from the other constants unless given."""
        if t is None:
            t = compute_t(n, epsilon, c, p_ch)
        return cls(n=n, epsilon=epsilon, c=c, p_ch=p_ch, e1=e1, e2=e2, t=int(t))

    def ensemble(self) -> EnsembleParams:
        return EnsembleParams.from_scheme(self.n, self.c)


@dataclass(frozen=True)
class EnergyLedger:
    """Exact energy bookkeeping: total = e1*sink_transmissions + e2*broadcasts."""

    sink_transmissions: int
    broadcasts: int
    total: float

    @classmethod
    def from_counts(cls, sink: int, broadcasts: int, e1: float, e2: float) -> "EnergyLedger":
        return cls(sink, broadcasts, e1 * sink + e2 * broadcasts)


@dataclass(frozen=True)
class TrialOutcome:
    status: DecodeStatus
    correct: bool
    ledger: EnergyLedger
    edge_count: int
    t_used: int

    def __post_init__(self):
        if self.correct and self.status is not DecodeStatus.UNIQUE:
            raise ValueError("a correct trial must have decoded uniquely")


@dataclass(frozen=True)
class ErasurePattern:
    """Full erasure realization of one trial, separable from the input bits.

    edge_erased[m, n] is True when the step-1 transmission over edge m->n
    failed all t rounds (only meaningful where an edge exists); sink_erased
    holds the 2n step-2 per-position erasure flags.
    """

    edge_erased: np.ndarray
    sink_erased: np.ndarray


def _draw_edge_erasures(adj: np.ndarray, eps_t: float, rng) -> np.ndarray:
    """Per-present-edge erasure flags; one uniform per edge, row-major order."""
    flags = np.zeros(adj.shape, dtype=bool)
    present = np.nonzero(adj)
    if present[0].size:
        flags[present] = rng.random(present[0].size) < eps_t
    return flags


def _draw_sink_erasures(n: int, epsilon: float, rng) -> np.ndarray:
    return rng.random(2 * n) < epsilon


def sample_erasure_pattern(g: GraphTopology, params: SchemeParams, rng) -> ErasurePattern:
    """Draw one trial's erasure realization (step-1 edges, then step-2)."""
    eps_t = params.epsilon**params.t
    edge = _draw_edge_erasures(g.dense(), eps_t, rng)
    sink = _draw_sink_erasures(params.n, params.epsilon, rng)
    return ErasurePattern(edge, sink)


def _as_bits(x, n: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.uint8)
    if arr.shape != (n,):
        raise ValueError(f"expected a length-{n} bit vector")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("inputs must be bits")
    return arr


def local_parities(adj: np.ndarray, x: np.ndarray, edge_erased: np.ndarray) -> np.ndarray:
    """Step-1 outcome for a fixed erasure realization.

    A node whose in-edges all arrived holds the XOR of its in-neighborhood
    (0 when the in-neighborhood is empty); any fully-erased in-edge erases
    the parity.
    """
    parity = (x.astype(np.int32) @ adj.astype(np.int32)) & 1
    y = parity.astype(np.int8)
    y[edge_erased.any(axis=0)] = ERASED
    return y


def sink_observation(x: np.ndarray, y: np.ndarray, sink_erased: np.ndarray) -> np.ndarray:
    """Step-2 outcome: [x, y] with per-position erasures; an already-erased
    parity stays erased no matter what the channel does."""
    n = x.shape[0]
    r = np.empty(2 * n, dtype=np.int8)
    r[:n] = np.where(sink_erased[:n], ERASED, x)
    r[n:] = np.where(sink_erased[n:] | (y == ERASED), ERASED, y)
    return r


def run_step1(g: GraphTopology, x, params: SchemeParams, rng) -> ErasedVector:
    """Broadcast every agent's bit t times and form local parities."""
    adj = g.dense()
    bits = _as_bits(x, params.n)
    edge_erased = _draw_edge_erasures(adj, params.epsilon**params.t, rng)
    return ErasedVector(local_parities(adj, bits, edge_erased))


def run_step2(x, y: ErasedVector, params: SchemeParams, rng) -> ErasedVector:
    """Send every agent's bit and local parity to the sink once each
    (2n sink transmissions)."""
    bits = _as_bits(x, params.n)
    if y.length != params.n:
        raise ValueError("parity vector length must equal the agent count")
    sink_erased = _draw_sink_erasures(params.n, params.epsilon, rng)
    return ErasedVector(sink_observation(bits, y.symbols, sink_erased))


def decode_observation(adj: np.ndarray, r: np.ndarray):
    """Decode a length-2n observation of x^T [I, A] by Gaussian elimination.

    Equivalent to eliminating the full non-erased column submatrix of
    [I, A]: observed systematic positions pin their variables, and the
    surviving parity equations are solved for the erased ones.

    Returns:
        (DecodeStatus, recovered-or-None).

    Raises:
        InconsistentSystemError: observed symbols satisfy no input.
    """
    n = adj.shape[0]
    sys_part = r[:n]
    par_part = r[n:]
    sys_known = sys_part != ERASED
    par_known = par_part != ERASED
    x_known = np.where(sys_known, sys_part, 0).astype(np.int32)
    predicted = (x_known @ adj.astype(np.int32)) & 1
    b = (par_part[par_known] ^ predicted[par_known]).astype(np.uint8) & 1

    unknown = np.nonzero(~sys_known)[0]
    if unknown.size == 0:
        if np.any(b):
            raise InconsistentSystemError("parities contradict the observed bits")
        return DecodeStatus.UNIQUE, sys_part.astype(np.uint8)

    equations = adj[np.ix_(unknown, np.nonzero(par_known)[0])].T
    status, solved = solve_unique(equations, b)
    if status is not DecodeStatus.UNIQUE:
        return DecodeStatus.AMBIGUOUS, None
    recovered = np.where(sys_known, sys_part, 0).astype(np.uint8)
    recovered[unknown] = solved
    return DecodeStatus.UNIQUE, recovered


def trial_from_pattern(g: GraphTopology, x, params: SchemeParams,
                       pattern: ErasurePattern) -> TrialOutcome:
    """Deterministic trial for a fixed erasure realization (replay path)."""
    adj = g.dense()
    bits = _as_bits(x, params.n)
    y = local_parities(adj, bits, pattern.edge_erased)
    r = sink_observation(bits, y, pattern.sink_erased)
    status, recovered = decode_observation(adj, r)
    correct = status is DecodeStatus.UNIQUE and np.array_equal(recovered, bits)
    ledger = EnergyLedger.from_counts(2 * params.n, params.n * params.t,
                                      params.e1, params.e2)
    return TrialOutcome(status, correct, ledger, edge_count(g), params.t)


def run_trial_gc3(g: GraphTopology, x, params: SchemeParams, rng) -> TrialOutcome:
    """One full trial: step 1, step 2, sink decode, and the energy ledger
    2n*e1 + n*t*e2 (every agent makes 2 sink transmissions and t broadcasts)."""
    if g.n != params.n:
        raise ValueError("graph size must match params.n")
    pattern = sample_erasure_pattern(g, params, rng)
    return trial_from_pattern(g, x, params, pattern)


def run_trial_naive(x, c_prime: float, params: SchemeParams, rng) -> TrialOutcome:
    """Baseline without inter-agent coding: each agent repeats its bit t'
    times straight to the sink; the block fails iff some agent loses every
    copy.  Ledger: n*t' sink transmissions, zero broadcasts."""
    bits = _as_bits(x, params.n)
    tprime = naive_repeats(params.n, c_prime, params.epsilon)
    erased_all = (rng.random((params.n, tprime)) < params.epsilon).all(axis=1)
    ok = not bool(erased_all.any())
    ledger = EnergyLedger.from_counts(params.n * tprime, 0, params.e1, params.e2)
    status = DecodeStatus.UNIQUE if ok else DecodeStatus.AMBIGUOUS
    return TrialOutcome(status, ok, ledger, 0, tprime)


def wilson_interval(failures: int, trials: int, z: float = _WILSON_Z):
    """95% Wilson score interval; well-behaved near 0 where these
    experiments live."""
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 0 <= failures <= trials:
        raise ValueError("failures out of range")
    p_hat = failures / trials
    denom = 1.0 + z * z / trials
    center = (p_hat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z * z / (4.0 * trials * trials)) / denom
    low = 0.0 if failures == 0 else max(0.0, center - half)
    high = 1.0 if failures == trials else min(1.0, center + half)
    return p_hat, low, high


@dataclass(frozen=True)
class EstimateResult:
    trials: int
    failures: int
    p_hat: float
    ci_low: float
    ci_high: float
    mean_energy: float
    mean_edges: float
    t_used: int


def _trial_rng(seed: int, n: int, index: int) -> np.random.Generator:
    # Parallel determinism: the substream depends only on (seed, n, index),
    # never on scheduling.
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, n, index))))


def _shared_graph(params: SchemeParams, seed: int) -> GraphTopology:
    return sample_er(params.ensemble(), _trial_rng(seed, params.n, _GRAPH_STREAM))


def _run_chunk(scheme: str, params: SchemeParams, seed: int, start: int, stop: int,
               c_prime, fixed_graph: bool):
    """Aggregate trials [start, stop); returns integer counters only so the
    merge is exact and independent of the chunk partition."""
    failures = 0
    sink_total = 0
    bcast_total = 0
    edges_total = 0
    graph = _shared_graph(params, seed) if (scheme == "gc3" and fixed_graph) else None
    for index in range(start, stop):
        rng = _trial_rng(seed, params.n, index)
        if scheme == "gc3":
            g = graph if graph is not None else sample_er(params.ensemble(), rng)
            x = rng.integers(0, 2, params.n, dtype=np.uint8)
            outcome = run_trial_gc3(g, x, params, rng)
        elif scheme == "naive":
            x = rng.integers(0, 2, params.n, dtype=np.uint8)
            outcome = run_trial_naive(x, c_prime, params, rng)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        failures += 0 if outcome.correct else 1
        sink_total += outcome.ledger.sink_transmissions
        bcast_total += outcome.ledger.broadcasts
        edges_total += outcome.edge_count
    return failures, sink_total, bcast_total, edges_total


def estimate_error_probability(scheme: str, params: SchemeParams, trials: int,
                               seed: int, c_prime: Optional[float] = None,
                               fixed_graph: bool = False,
                               workers: int = 1) -> EstimateResult:
    """Monte Carlo block-error estimate with a Wilson 95% interval.

    By default a fresh graph is sampled every trial, so the measured
    quantity is the ensemble-averaged error probability; fixed_graph reuses
    one sampled graph to study a single instance.  The input bits are drawn
    uniformly per trial.  Deterministic given (seed, params, trials), also
    under parallel execution.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if scheme == "naive" and c_prime is None:
        raise ValueError("the naive scheme needs c_prime")
    n_chunks = max(1, min(workers * 4, trials)) if workers > 1 else 1
    bounds_ = np.linspace(0, trials, n_chunks + 1).astype(int)
    args = [(scheme, params, seed, int(a), int(b), c_prime, fixed_graph)
            for a, b in zip(bounds_[:-1], bounds_[1:]) if a < b]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk_star, args))
    else:
        parts = [_run_chunk(*a) for a in args]
    failures = sum(p[0] for p in parts)
    sink_total = sum(p[1] for p in parts)
    bcast_total = sum(p[2] for p in parts)
    edges_total = sum(p[3] for p in parts)
    p_hat, low, high = wilson_interval(failures, trials)
    mean_energy = (params.e1 * sink_total + params.e2 * bcast_total) / trials
    t_used = params.t if scheme == "gc3" else naive_repeats(params.n, c_prime, params.epsilon)
    return EstimateResult(trials, failures, p_hat, low, high,
                          mean_energy, edges_total / trials, t_used)


def _run_chunk_star(args):
    return _run_chunk(*args)
