"""Trace-of-powers decision procedures and imaginary-time-cooling estimators.

The decision procedures mirror exponential-precision counting algorithms at
desk scale: the quantities a counting machine would accumulate path by path
are evaluated here either by honest path enumeration (small dimensions) or by
exact dense linear algebra standing in for the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.special import logsumexp

from .circuits import AcceptOperator, PromiseParams
from .linalg import SparseHermitian, hermitian_norm

PATHSUM_DIM_CAP = 64
PATHSUM_POWER_CAP = 6
PATHSUM_BUDGET = 2**22
TAYLOR_REMAINDER_CONSTANT = 4.0  # calibrated O(1) factor in the remainder bound
VERDICT_TOL = 1e-12


@dataclass(frozen=True)
class DecisionOutcome:
    verdict: str  # YES | NO | INCONCLUSIVE
    statistic: float
    thresholds: tuple[float, float]

    def __post_init__(self):
        if self.verdict not in ("YES", "NO", "INCONCLUSIVE"):
            raise ValueError(f"bad verdict {self.verdict!r}")


def _decide(statistic: float, thresholds: tuple[float, float], high_is_yes: bool) -> DecisionOutcome:
    midpoint = (thresholds[0] + thresholds[1]) / 2.0
    if abs(statistic - midpoint) <= VERDICT_TOL:
        verdict = "INCONCLUSIVE"
    elif (statistic > midpoint) == high_is_yes:
        verdict = "YES"
    else:
        verdict = "NO"
    return DecisionOutcome(verdict=verdict, statistic=float(statistic), thresholds=thresholds)


@dataclass(frozen=True)
class PowerPlan:
    """Power q plus the trace thresholds separating YES from NO instances."""

    q: int
    yes_threshold: float
    no_threshold: float
    margin: float

    def __post_init__(self):
        if self.yes_threshold <= self.no_threshold:
            raise ValueError("yes_threshold must exceed no_threshold")
        if abs(self.margin - (self.yes_threshold - self.no_threshold)) > 1e-15 * max(
            1.0, abs(self.yes_threshold)
        ):
            raise ValueError("margin must equal yes_threshold - no_threshold")


def choose_power(c: float, s: float, delta: float, w: int) -> PowerPlan:
    """Pick q = ceil((s/delta) ln(2^(w+1) s / (c-s))), clamped to >= 1.

    The log argument is the inverse of the often-quoted one: this is the
    orientation under which 2^w exp(-q delta / s) <= (c-s)/(2s) actually
    holds, which is what the separation bound needs.
    """
    if w < 0:
        raise ValueError("witness size must be nonnegative")
    if not (c > s >= delta > 0):
        raise ValueError(
            f"need c > s >= delta > 0, got c={c}, s={s}, delta={delta}; "
            "a promise with delta > s cannot be satisfied"
        )
    q = math.ceil((s / delta) * math.log(2.0 ** (w + 1) * s / (c - s)))
    q = max(q, 1)
    yes_threshold = c**q
    separation = s**q * (c - s) / (2 * s)
    no_threshold = yes_threshold - separation
    if no_threshold >= yes_threshold:
        raise ValueError(
            f"trace separation {separation!r} at q={q} is below double-precision "
            f"resolution of the threshold {yes_threshold!r}; the plan cannot be "
            "represented at this precision"
        )
    return PowerPlan(
        q=q,
        yes_threshold=yes_threshold,
        no_threshold=no_threshold,
        margin=yes_threshold - no_threshold,
    )


def no_case_trace_bound(plan: PowerPlan, c: float, s: float, delta: float, w: int) -> float:
    """s^q + s^q (2^w - 1)(1 - delta/s)^q, the NO-case ceiling on Tr(Q^q)."""
    q = plan.q
    return s**q + s**q * (2.0**w - 1.0) * (1.0 - delta / s) ** q


def _as_matrix(q_op) -> np.ndarray:
    if isinstance(q_op, AcceptOperator):
        return q_op.q_matrix
    if isinstance(q_op, SparseHermitian):
        return q_op.matrix
    return np.asarray(q_op, dtype=complex)


def trace_power(q_op, q: int, method: str = "direct") -> float:
    """Tr(Q^q) by repeated matrix product or by honest path-sum enumeration."""
    if q < 1:
        raise ValueError(f"power must be >= 1, got {q}")
    mat = _as_matrix(q_op)
    d = mat.shape[0]
    if method == "direct":
        return float(np.real(np.trace(np.linalg.matrix_power(mat, q))))
    if method != "pathsum":
        raise ValueError(f"unknown trace method {method!r}")
    if d > PATHSUM_DIM_CAP or q > PATHSUM_POWER_CAP or d**q > PATHSUM_BUDGET:
        raise ValueError(
            f"pathsum enumeration refused: dimension {d}, power {q} means "
            f"{d}**{q} = {d**q} paths (caps: dim <= {PATHSUM_DIM_CAP}, "
            f"q <= {PATHSUM_POWER_CAP}, paths <= {PATHSUM_BUDGET})"
        )
    if q == 1:
        return float(np.real(sum(mat[x, x] for x in range(d))))
    total = 0.0 + 0.0j
    # sum over cyclic index sequences x_1 .. x_q; the innermost index is
    # batched through a dot product but every path product is still formed
    for prefix in product(range(d), repeat=q - 1):
        amp = 1.0 + 0.0j
        for i in range(q - 2):
            amp *= mat[prefix[i], prefix[i + 1]]
        total += amp * np.dot(mat[prefix[-1], :], mat[:, prefix[0]])
    return float(np.real(total))


def decide_power(
    q_op: AcceptOperator, params: PromiseParams, delta: float | None = None
) -> DecisionOutcome:
    """YES iff Tr(Q^q) clears the midpoint of the power-plan thresholds."""
    if delta is None:
        delta = min(params.g1, params.g2)
    plan = choose_power(params.c, params.s, delta, params.w)
    statistic = trace_power(q_op, plan.q, method="direct")
    return _decide(statistic, (plan.no_threshold, plan.yes_threshold), high_is_yes=True)


@dataclass(frozen=True)
class CoolingPlan:
    """Imaginary-time parameters: inverse temperature, Taylor order, error
    exponent, and the norm bound the order was chosen against."""

    beta: float
    k_order: int
    f_n: float
    norm_bound: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        required = 2.0 * self.beta * math.e * self.norm_bound + self.f_n
        if self.k_order <= required:
            raise ValueError(
                f"Taylor order {self.k_order} must exceed "
                f"2*beta*e*||H|| + f_n = {required!r}"
            )


def make_cooling_plan(beta: float, f_n: float, h: SparseHermitian) -> CoolingPlan:
    norm_bound = h.norm()
    k_order = math.floor(2.0 * beta * math.e * norm_bound + f_n) + 1
    return CoolingPlan(beta=beta, k_order=k_order, f_n=f_n, norm_bound=norm_bound)


def taylor_remainder_bound(
    plan: CoolingPlan, a_norm: float, constant: float = TAYLOR_REMAINDER_CONSTANT
) -> float:
    """(2 beta ||H||)^(K+1) / (K+1)! * ||A|| * constant, evaluated in log space."""
    x = 2.0 * plan.beta * plan.norm_bound
    if x == 0.0:
        return 0.0
    log_term = (plan.k_order + 1) * math.log(x) - math.lgamma(plan.k_order + 2)
    return constant * a_norm * math.exp(log_term)


def thermal_expectation(
    h: SparseHermitian, a: SparseHermitian, plan: CoolingPlan, method: str = "exact"
) -> float:
    """Unnormalized thermal value Tr(exp(-2 beta H) A)."""
    if h.dim != a.dim:
        raise ValueError("H and A dimensions differ")
    if method == "exact":
        vals, vecs = h.eigensystem()
        a_diag = np.real(np.einsum("ij,jk,ki->i", vecs.conj().T, a.matrix, vecs))
        return float(np.sum(np.exp(-2.0 * plan.beta * vals) * a_diag))
    if method != "taylor":
        raise ValueError(f"unknown thermal method {method!r}")
    if plan.norm_bound < h.norm() - 1e-9:
        raise ValueError(
            f"plan norm bound {plan.norm_bound!r} below measured ||H|| {h.norm()!r}"
        )
    terms = []
    v = a.matrix.copy()  # v = H^k A
    coeff = 1.0
    for k in range(plan.k_order + 1):
        if k > 0:
            v = h.matrix @ v
            coeff *= -2.0 * plan.beta / k
        terms.append(coeff * float(np.real(np.trace(v))))
    return math.fsum(terms)


def thermal_ground_overlap(h: SparseHermitian, beta: float) -> float:
    """Closed form (1 + sum_{i != 1} exp(-2 beta (E_i - E_1)))^(-1) generalized
    to a degenerate ground space: the thermal weight of the ground eigenspace."""
    vals = h.eigenvalues()
    shifted = -2.0 * beta * (vals - vals[0])
    weights = np.exp(shifted)
    ground = np.abs(vals - vals[0]) <= 1e-12
    return float(np.sum(weights[ground]) / np.sum(weights))


def _bisect_log_trace(log_value: float, lo: float, hi: float, iters: int = 120) -> float:
    """Binary search against a threshold oracle for the log-trace."""
    for _ in range(iters):
        mid = (lo + hi) / 2.0
        if log_value <= mid:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0


def cooling_decide(
    h: SparseHermitian,
    a: SparseHermitian,
    thresholds: tuple[float, float],
    delta: float,
    n: int,
) -> DecisionOutcome:
    """Decide whether the ground-state observable is below a_val or above b_val
    by cooling the maximally mixed state for imaginary time beta = n/delta.

    The normalization is estimated by bisection against a trace oracle (the
    desk-scale stand-in for a counting machine), then the normalized thermal
    value is compared against the threshold midpoint.
    """
    a_val, b_val = thresholds
    if b_val <= a_val:
        raise ValueError(f"need b_val > a_val, got {thresholds}")
    if delta <= 0 or n < 1:
        raise ValueError("delta must be positive and n >= 1")
    measured_gap = h.spectral_gap()
    if measured_gap < delta:
        return DecisionOutcome(
            verdict="INCONCLUSIVE",
            statistic=float("nan"),
            thresholds=(float(a_val), float(b_val)),
        )
    beta = n / delta
    vals, vecs = h.eigensystem()
    e1 = float(vals[0])
    shifted = -2.0 * beta * (vals - e1)
    log_norm_shifted = float(logsumexp(shifted))  # log of e^{2 beta E1} * N
    # bisection bracket: shifted normalization lies in [0, log dim]
    log_est = _bisect_log_trace(log_norm_shifted, -1.0, math.log(h.dim) + 1.0)
    rel_err = abs(math.expm1(log_est - log_norm_shifted))
    if rel_err > 1e-12:
        raise ValueError(f"normalization bisection failed: relative error {rel_err}")
    a_diag = np.real(np.einsum("ij,jk,ki->i", vecs.conj().T, a.matrix, vecs))
    numerator_shifted = float(np.sum(np.exp(shifted) * a_diag))
    statistic = numerator_shifted / math.exp(log_est)
    return _decide(statistic, (float(a_val), float(b_val)), high_is_yes=False)


def cooling_overlap_defect(h: SparseHermitian, beta: float) -> float:
    """(dim - 1) exp(-2 beta gap): how far the thermal state can sit from the
    ground state in expectation values (times 2 ||A||)."""
    return (h.dim - 1) * math.exp(-2.0 * beta * h.spectral_gap())


def postqma_margin(w: int, t: int, u: int) -> float:
    """2^-w (1 - 2^-t) - 2^-u: the distinguishing margin left after replacing
    an amplified postselected witness by the maximally mixed state."""
    if w < 1 or u < 1 or t < 0:
        raise ValueError("need w, u >= 1 and t >= 0")
    return 2.0**-w * (1.0 - 2.0**-t) - 2.0**-u


def postqma_margin_positive_condition(w: int, t: int, u: int) -> bool:
    """The margin is positive iff 1 - 2^-t > 2^(w-u)."""
    return 1.0 - 2.0**-t > 2.0 ** (w - u)


def asymmetric_decide(q_op: AcceptOperator, params: PromiseParams) -> DecisionOutcome:
    """Decision pipeline when only YES instances promise a spectral gap g1.

    Step 1 is a stand-in gap estimator (exact eigensolver): gaps below g1/2
    reject outright; gaps at g1/2 or above fall through to the power method
    run with an effective gap promise of g1/2.
    """
    if params.g1 <= 0:
        raise ValueError("asymmetric decision needs a YES-side gap promise g1 > 0")
    gap = q_op.spectral_gap
    if gap < params.g1 / 2.0:
        return DecisionOutcome(
            verdict="NO", statistic=gap, thresholds=(params.g1 / 2.0, params.g1)
        )
    return decide_power(q_op, params, delta=params.g1 / 2.0)
