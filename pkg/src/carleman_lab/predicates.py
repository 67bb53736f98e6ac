"""Finite-prefix diagnostics for structural properties of weight sequences.

Asymptotic statements (sup finiteness, series divergence) cannot be decided
from a finite tabulation, so every predicate returns a three-valued Verdict:
holds / fails-with-witness / inconclusive-with-trend.  The classifier
thresholds are heuristics of this module, not of the underlying theory, and
are surfaced in the emitted reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .seqcore import DerivedScales, DomainError, WeightSequence, log_factorial
from . import envelope

__all__ = [
    "Verdict",
    "QuasiDiagnostic",
    "is_log_convex",
    "growth_diagnostic",
    "quasianalytic_diagnostic",
    "inclusion_diagnostic",
    "CONVEXITY_EPS",
    "PLATEAU_EPS",
    "SLOPE_SLACK",
]

CONVEXITY_EPS = 1e-9      # relative, log-space, for three-term convexity tests
PLATEAU_EPS = 1e-3        # last-decade increase below this counts as a plateau
SLOPE_SLACK = 0.25        # half-width around the -1 log-log divergence boundary
SUM_STALL_REL = 1e-2      # relative last-decade partial-sum growth threshold
SLOPE_WINDOW_FRAC = 0.25  # tail fraction of indices used for the slope fit


@dataclass(frozen=True)
class Verdict:
    """Outcome of a finite-prefix predicate."""

    outcome: str  # holds | fails | inconclusive
    witness_k: Optional[int] = None
    margin: float = 0.0
    statistic_trace: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.outcome not in ("holds", "fails", "inconclusive"):
            raise ValueError(f"bad outcome {self.outcome!r}")
        if self.outcome == "fails" and self.witness_k is None:
            raise ValueError("a failing verdict needs a witness index")
        if self.statistic_trace is not None:
            arr = np.asarray(self.statistic_trace, dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, "statistic_trace", arr)

    @property
    def holds(self) -> bool:
        return self.outcome == "holds"

    def to_report(self, predicate: str) -> dict:
        return {
            "predicate": predicate,
            "verdict": self.outcome,
            "witness_k": None if self.witness_k is None else int(self.witness_k),
            "margin": float(self.margin),
            "statistic_trace": []
            if self.statistic_trace is None
            else [float(v) for v in self.statistic_trace],
        }


def is_log_convex(W: WeightSequence, weak: bool = False, eps: float = CONVEXITY_EPS) -> Verdict:
    """Three-term convexity of log M_k (strong) or log(k! M_k) (weak).

    Holds iff y_{k-1} + y_{k+1} - 2 y_k >= -eps at every interior index;
    a failure reports the first violating interior k.
    """
    y = W.log_M.copy()
    if weak:
        y = y + log_factorial(W.ks.astype(float))
    d2 = y[:-2] + y[2:] - 2.0 * y[1:-1]
    # eps is relative in log-space: scale by the magnitude of the entries
    scale = np.maximum(1.0, np.maximum(np.abs(y[:-2]), np.maximum(np.abs(y[1:-1]), np.abs(y[2:]))))
    slack = d2 / scale
    margin = float(np.min(slack))
    if margin >= -eps:
        return Verdict("holds", margin=margin)
    witness = int(W.k_min + 1 + np.argmax(slack < -eps))
    return Verdict("fails", witness_k=witness, margin=margin)


def _last_decade_start(n: int) -> int:
    """Index opening the last decade (factor 10) of an n-point trace."""
    return max(0, n - 1 - 9 * (n - 1) // 10) if n > 1 else 0


def _decade_increase(trace: np.ndarray) -> float:
    i = _last_decade_start(len(trace))
    return float(trace[-1] - trace[i])


def growth_diagnostic(
    W: WeightSequence, mode: str, eps: float = PLATEAU_EPS
) -> Verdict:
    """Running prefix supremum of the derivation-closed / moderate-growth statistic.

    derivation-closed: sup_k (log M_{k+1} - log M_k) / k;
    moderate-growth:   sup_{j,k>=1} (log M_{j+k} - log M_j - log M_k) / (j+k).

    Holds when the running sup has plateaued over the last decade of indices,
    inconclusive otherwise; a finite prefix can never refute sup-finiteness,
    so the outcome is never "fails".
    """
    if W.k_min != 0:
        raise DomainError("growth diagnostics need tabulations starting at k = 0")
    logM = W.log_M
    n = W.k_max
    if mode == "derivation-closed":
        ks = np.arange(1, n, dtype=float)
        stat = (logM[2:] - logM[1:-1]) / ks
    elif mode == "moderate-growth":
        stat = np.full(n - 1, -np.inf)
        for s in range(2, n + 1):
            js = np.arange(1, s // 2 + 1)
            stat[s - 2] = np.max((logM[s] - logM[js] - logM[s - js]) / s)
    else:
        raise DomainError(f"unknown growth mode {mode!r}")
    run_sup = np.maximum.accumulate(stat)
    inc = _decade_increase(run_sup)
    margin = float(run_sup[-1])
    if inc < eps:
        return Verdict("holds", margin=margin, statistic_trace=run_sup)
    return Verdict("inconclusive", margin=margin, statistic_trace=run_sup)


@dataclass(frozen=True)
class QuasiDiagnostic:
    """Joint trend classification of the four quasianalyticity criterion sums.

    The four summand sequences, in order: 1/m_k (raw Carleman scale),
    1/m^(b,i)_k (increasing minorant), (1/M^(b,lc)_k)^{1/k} (log-convex
    minorant root), and M^(b,lc)_k / M^(b,lc)_{k+1} (minorant ratio).  The
    theorem asserts criteria (2)-(4) are equivalent; the raw-scale sum agrees
    with (2) whenever m is increasing.  A single classification is emitted
    only when all four trends agree.
    """

    partial_sums: tuple
    term_slope: tuple
    per_criterion: tuple
    classification: str
    edge_sensitive: bool

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "per_criterion": list(self.per_criterion),
            "term_slope": [float(s) for s in self.term_slope],
            "partial_sums_final": [float(p[-1]) for p in self.partial_sums],
            "edge_sensitive": bool(self.edge_sensitive),
            "heuristic": "slope/plateau thresholds are finite-sample heuristics",
        }


def _fit_tail_slope(log_summand: np.ndarray, ks: np.ndarray) -> float:
    """Least-squares slope of log summand vs log k over the tail window."""
    n = len(log_summand)
    i0 = int(n * (1.0 - SLOPE_WINDOW_FRAC))
    i0 = min(max(i0, 0), n - 2)
    x = np.log(ks[i0:])
    y = log_summand[i0:]
    xm, ym = x.mean(), y.mean()
    denom = np.sum((x - xm) ** 2)
    if denom == 0.0:
        return 0.0
    return float(np.sum((x - xm) * (y - ym)) / denom)


def _classify(log_summand: np.ndarray, ks: np.ndarray) -> tuple[str, float, np.ndarray]:
    """Trend of sum exp(log_summand); all accumulation happens in log-space.

    The summands of the quasianalyticity criteria underflow f64 for strongly
    shifted families (terms like exp(-1e7/k)), so partial sums are carried
    as log S_N via a running logaddexp.
    """
    log_S = np.logaddexp.accumulate(log_summand)
    slope = _fit_tail_slope(log_summand, ks)
    i = _last_decade_start(len(log_S))
    # (S_N - S_i) / S_N, computed without leaving log-space
    rel_inc = -np.expm1(log_S[i] - log_S[-1])
    still_increasing = rel_inc > SUM_STALL_REL
    near_boundary = slope >= -1.0 - SLOPE_SLACK
    if near_boundary and still_increasing:
        cls = "divergent-trend"
    elif (not still_increasing) or slope < -1.0 - SLOPE_SLACK:
        cls = "convergent-trend"
    else:
        cls = "inconclusive"
    return cls, slope, np.exp(log_S)


def quasianalytic_diagnostic(W: WeightSequence) -> QuasiDiagnostic:
    """Evaluate the four quasianalyticity criterion sums on the prefix."""
    if W.k_min != 0:
        raise DomainError("quasianalyticity diagnostics need tabulations from k = 0")
    scales = DerivedScales.from_weight_sequence(W)
    ks = np.arange(1, W.k_max + 1, dtype=float)

    # (i) raw scale 1/m_k
    s_raw = -scales.log_m
    # (ii) increasing minorant 1/m^(b,i)_k
    log_minc, edge_inc = envelope.increasing_minorant(scales)
    s_inc = -log_minc
    # (iii) log-convex minorant of k! M_k: (1/M^blc_k)^{1/k}
    env = envelope.log_convex_minorant(W, weak_basis=True)
    log_blc = env.values  # log of M^(b,lc) in the k! M_k scale, index 0..k_max
    s_lc = -log_blc[1:] / ks
    # (iv) ratio M^blc_k / M^blc_{k+1}, k = 0..k_max-1
    s_ratio = log_blc[:-1] - log_blc[1:]

    results = []
    for summand, kk in (
        (s_raw, ks),
        (s_inc, ks),
        (s_lc, ks),
        (s_ratio, np.arange(1, W.k_max + 1, dtype=float)),
    ):
        results.append(_classify(summand, kk))
    classes = tuple(r[0] for r in results)
    slopes = tuple(r[1] for r in results)
    sums = tuple(r[2] for r in results)
    agreed = classes[0] if len(set(classes)) == 1 else "inconclusive"
    return QuasiDiagnostic(
        partial_sums=sums,
        term_slope=slopes,
        per_criterion=classes,
        classification=agreed,
        edge_sensitive=bool(edge_inc or env.is_edge_sensitive),
    )


def inclusion_diagnostic(W1: WeightSequence, W2: WeightSequence) -> Verdict:
    """Prefix evidence for F^{M1} subseteq F^{M2}: exists rho with M1_k <= rho^{k+1} M2_k.

    Computes s_k = (log M1_k - log M2_k)/(k+1); holds if the sup is attained
    away from the right edge or the tail is non-increasing, inconclusive if
    s_k is still rising at the edge.  The margin reports log rho = sup s_k.
    A finite prefix cannot refute existence, so the verdict never fails.
    """
    k_lo = max(W1.k_min, W2.k_min)
    k_hi = min(W1.k_max, W2.k_max)
    if k_hi < k_lo + 2:
        raise DomainError("tabulated ranges barely overlap")
    ks = np.arange(k_lo, k_hi + 1, dtype=float)
    s = (W1.slice(k_lo, k_hi) - W2.slice(k_lo, k_hi)) / (ks + 1.0)
    i_max = int(np.argmax(s))
    log_rho = float(s[i_max])
    n = len(s)
    away_from_edge = i_max < 0.9 * (n - 1)
    i_dec = _last_decade_start(n)
    tail = s[i_dec:]
    tail_nonincreasing = bool(np.all(np.diff(tail) <= 1e-12))
    if away_from_edge or tail_nonincreasing:
        return Verdict("holds", margin=log_rho, statistic_trace=s)
    # still rising at the edge: a bounded limit is still possible when the
    # increments are clearly summable (log-log slope well below -1)
    d = np.diff(s[n // 2 :])
    pos = d > 0.0
    if np.count_nonzero(pos) >= 10:
        kk = np.log(np.arange(n // 2 + 1, n, dtype=float)[pos])
        yy = np.log(d[pos])
        slope = float(np.polyfit(kk, yy, 1)[0])
        if slope < -1.5:
            return Verdict("holds", margin=log_rho, statistic_trace=s)
    return Verdict("inconclusive", margin=log_rho, statistic_trace=s)
