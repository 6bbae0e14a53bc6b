"""Closed-form bound evaluation: converse lower bounds on energy and
sparseness, ensemble block-error upper bounds (exact binomial sum and its
closed form), and the per-entry probability formulas behind them.

All logarithms are natural.  Probability-style bound values can exceed 1 in
invalid regimes; they are reported verbatim with a "vacuous" flag rather
than silently clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from scipy.special import gammaln, logsumexp

from .protocol import compute_t, naive_repeats

#: Multiplier turning the per-bit in-network loss budget p_ch into an
#: effective erasure add-on: epsilon0 = (2/(1 - 1/e) + 1)*p_ch + epsilon.
EFFECTIVE_ERASURE_FACTOR = 2.0 / (1.0 - 1.0 / math.e) + 1.0

_E_1_5 = math.exp(1.5)


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound: the value is present iff every precondition holds.

    preconditions is a tuple of (name, satisfied) pairs; vacuous marks a
    probability-style bound whose value exceeds 1.
    """

    formula_id: str
    value: Optional[float]
    preconditions: Tuple[Tuple[str, bool], ...]
    vacuous: bool = False

    @property
    def ok(self) -> bool:
        return all(flag for _, flag in self.preconditions)

    def failed_names(self) -> list:
        return [name for name, flag in self.preconditions if not flag]


def _report(formula_id: str, value: float, pre: Sequence[Tuple[str, bool]],
            probability: bool = False) -> BoundReport:
    pre = tuple(pre)
    if not all(flag for _, flag in pre):
        return BoundReport(formula_id, None, pre)
    vacuous = bool(probability and value > 1.0)
    return BoundReport(formula_id, value, pre, vacuous)


@dataclass(frozen=True)
class LowerBoundInputs:
    """Inputs for the converse bounds: sparseness cap d_cap, energy cap
    e_cap, and target block-error probability p_tar."""

    n: int
    e1: float
    e2: float
    d_cap: float
    e_cap: float
    epsilon: float
    p_tar: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two agents")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie strictly between 0 and 1")
        if not 0.0 < self.p_tar < 1.0:
            raise ValueError("target error probability must lie in (0, 1)")
        if self.d_cap <= 0.0 or self.e_cap <= 0.0:
            raise ValueError("caps must be positive")

    @property
    def delta(self) -> float:
        """ln(1/(1 - p_tar)); the exact form, never the small-p_tar
        approximation."""
        return math.log(1.0 / (1.0 - self.p_tar))


def energy_lower_bound(inputs: LowerBoundInputs) -> BoundReport:
    """Minimum total energy of any feasible scheme under a sparseness cap.

    value = max(n*e1, min((n*e1/2)*ln(n/(2d)), (n^2*e2/(4D))*ln(n/(2d)))
                  / ln(1/eps))
    with d = delta, valid when n^2/(4*delta*D) > e^1.5.
    """
    delta = inputs.delta
    pre = [("n2_over_4_delta_d_gt_e15",
            inputs.n**2 / (4.0 * delta * inputs.d_cap) > _E_1_5)]
    if not pre[0][1]:
        return _report("problem1_energy", 0.0, pre)
    log_term = math.log(inputs.n / (2.0 * delta))
    sink_branch = (inputs.n * inputs.e1 / 2.0) * log_term
    broadcast_branch = (inputs.n**2 * inputs.e2 / (4.0 * inputs.d_cap)) * log_term
    value = max(inputs.n * inputs.e1,
                min(sink_branch, broadcast_branch) / math.log(1.0 / inputs.epsilon))
    return _report("problem1_energy", value, pre)


def sparseness_lower_bound(inputs: LowerBoundInputs) -> BoundReport:
    """Minimum edge count of any feasible scheme under an energy cap.

    value = n^2*e2*ln(n/(2d)) / (4*ln(1/eps)*e_cap), valid when
    e2*n^2/(4*delta*e_cap) > e^1.5 and the cap is below the sink-only
    budget (n*e1/(2*ln(1/eps)))*ln(n/(2d)).
    """
    delta = inputs.delta
    log_term = math.log(inputs.n / (2.0 * delta))
    sink_only_budget = (inputs.n * inputs.e1 / (2.0 * math.log(1.0 / inputs.epsilon))) * log_term
    pre = [
        ("e2n2_over_4_delta_ecap_gt_e15",
         inputs.e2 * inputs.n**2 / (4.0 * delta * inputs.e_cap) > _E_1_5),
        ("ecap_below_sink_only_budget", inputs.e_cap < sink_only_budget),
    ]
    value = (inputs.n**2 * inputs.e2 * log_term
             / (4.0 * math.log(1.0 / inputs.epsilon) * inputs.e_cap))
    return _report("problem2_sparseness", value, pre)


@dataclass(frozen=True)
class UpperBoundInputs:
    """Inputs for the ensemble error bounds over the random-graph code."""

    n: int
    c: float
    eta: float
    epsilon: float
    p_ch: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two agents")
        if self.c <= 0.0:
            raise ValueError("c must be positive")
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if not 0.0 < self.p_ch < 0.5:
            raise ValueError("p_ch must lie in (0, 1/2)")

    @property
    def epsilon0(self) -> float:
        return EFFECTIVE_ERASURE_FACTOR * self.p_ch + self.epsilon

    @property
    def b_eta(self) -> float:
        e0 = self.epsilon0
        return 0.5 * (1.0 - e0) * (1.0 - (1.0 - math.exp(-2.0 * self.c * self.eta)) / 2.0)

    @property
    def p(self) -> float:
        """Ensemble connection probability c*ln(n)/n."""
        return self.c * math.log(self.n) / self.n

    @property
    def decay_exponent(self) -> float:
        """c*(1 - epsilon0)*(1 - c*eta); polynomial decay needs this > 2."""
        return self.c * (1.0 - self.epsilon0) * (1.0 - self.c * self.eta)


def ensemble_error_upper_closed(inputs: UpperBoundInputs) -> BoundReport:
    """Closed-form ensemble error bound
    (1 - b_eta)^n + eta*e*eps*n^(2 - c(1-eps0)(1-c*eta)) / ln(n),
    evaluated in the log domain; valid when eps < b_eta and c*ln(n) > 1.
    """
    pre = [
        ("eps_below_b_eta", inputs.epsilon < inputs.b_eta),
        ("c_ln_n_gt_1", inputs.c * math.log(inputs.n) > 1.0),
    ]
    if not all(flag for _, flag in pre):
        return _report("theorem_closed", 0.0, pre, probability=True)
    first = math.exp(inputs.n * math.log1p(-inputs.b_eta))
    if inputs.epsilon == 0.0:
        second = 0.0
    else:
        log_second = (math.log(inputs.eta) + 1.0 + math.log(inputs.epsilon)
                      + (2.0 - inputs.decay_exponent) * math.log(inputs.n)
                      - math.log(math.log(inputs.n)))
        second = math.exp(log_second)
    return _report("theorem_closed", first + second, pre, probability=True)


def ensemble_error_upper_sum(inputs: UpperBoundInputs) -> BoundReport:
    """Exact union-bound sum
    sum_{k=1..n} C(n,k) eps^k [eps0 + (1-eps0)(1+(1-2p)^k)/2]^n
    with p = c*ln(n)/n, evaluated with log-binomials and log-sum-exp so the
    near-k=n/2 terms neither underflow nor overflow.
    """
    pre = [
        ("c_ln_n_gt_1", inputs.c * math.log(inputs.n) > 1.0),
        ("connection_prob_le_1", inputs.p <= 1.0),
    ]
    if not all(flag for _, flag in pre):
        return _report("union_sum", 0.0, pre, probability=True)
    if inputs.epsilon == 0.0:
        return _report("union_sum", 0.0, pre, probability=True)
    n = inputs.n
    e0 = inputs.epsilon0
    log_eps = math.log(inputs.epsilon)
    base = 1.0 - 2.0 * inputs.p
    log_terms = []
    for k in range(1, n + 1):
        bracket = e0 + (1.0 - e0) * (1.0 + base**k) / 2.0
        log_comb = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
        log_terms.append(log_comb + k * log_eps + n * math.log(bracket))
    value = float(math.exp(logsumexp(log_terms)))
    return _report("union_sum", value, pre, probability=True)


def parity_zero_prob(k: int, p: float) -> float:
    """Probability that a Binomial(k, p) count is even: (1 + (1-2p)^k)/2.

    This is the chance that the parity positions tied to k marked inputs
    read zero because an even number of the k slots connect.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return (1.0 + (1.0 - 2.0 * p) ** k) / 2.0


def systematic_confusion_prob(k: int, epsilon: float) -> float:
    """Probability epsilon^k that all k nonzero systematic positions erase
    in step 2."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return epsilon**k


def naive_error_upper(n: int, c_prime: float, epsilon: float) -> BoundReport:
    """Union bound for the repetition baseline with the realized integer
    round count t': min(1, n*epsilon^t') <= n^(1-c_prime)."""
    pre = [("c_prime_gt_1", c_prime > 1.0)]
    if not pre[0][1]:
        return _report("naive_union", 0.0, pre, probability=True)
    tprime = naive_repeats(n, c_prime, epsilon)
    value = min(1.0, n * epsilon**tprime)
    return _report("naive_union", value, pre, probability=True)


@dataclass(frozen=True)
class GapRow:
    n: int
    t: int
    upper_energy: float
    lower: BoundReport
    ratio: Optional[float]
    ratio_over_loglog: Optional[float]


def gap_ratio_trend(n_list: Sequence[int], e1: float, e2: float, epsilon: float,
                    c: float, p_ch: float,
                    p_tar_list: Optional[Sequence[float]] = None,
                    d_cap_list: Optional[Sequence[float]] = None) -> list:
    """Realized scheme energy 2n*e1 + n*t*e2 against the converse bound.

    Defaults per n: p_tar = n**-0.5 and d_cap = 2*c*n*ln(n), the sparse
    regime the scheme is built for.  Emits both the raw ratio and
    ratio/ln(ln(n)); precondition failures are carried per row.
    """
    rows = []
    for idx, n in enumerate(n_list):
        p_tar = p_tar_list[idx] if p_tar_list is not None else n**-0.5
        d_cap = d_cap_list[idx] if d_cap_list is not None else 2.0 * c * n * math.log(n)
        t = compute_t(n, epsilon, c, p_ch)
        upper = 2.0 * n * e1 + n * t * e2
        inputs = LowerBoundInputs(n=n, e1=e1, e2=e2, d_cap=d_cap, e_cap=upper,
                                  epsilon=epsilon, p_tar=p_tar)
        lower = energy_lower_bound(inputs)
        if lower.value is not None and lower.value > 0.0:
            ratio = upper / lower.value
            ratio_over = ratio / math.log(math.log(n))
        else:
            ratio = None
            ratio_over = None
        rows.append(GapRow(n, t, upper, lower, ratio, ratio_over))
    return rows
