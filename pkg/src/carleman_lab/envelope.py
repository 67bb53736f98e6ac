"""Minorant constructions, the check-sequence bijection, and sequence composition.

Everything operates on log-space tabulations.  The lower convex envelope is
computed with a monotone-chain hull sweep; the O(N^3) two-sided infimum
formula it is equivalent to lives in the test suite as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma

import numpy as np

from .seqcore import (
    DerivedScales,
    DomainError,
    WeightSequence,
    log_factorial,
)

__all__ = [
    "EnvelopeResult",
    "increasing_minorant",
    "log_convex_minorant",
    "lower_convex_envelope",
    "check_sequence",
    "check_scale",
    "uncheck_sequence",
    "uncheck_scale",
    "compose_sequences",
]

MAX_COMPOSE_K = 500


@dataclass(frozen=True)
class EnvelopeResult:
    """Lower convex envelope of a log-space sequence.

    ``values`` is the envelope sampled at every tabulated index,
    ``contact_set`` the hull vertices (as positions into ``values``), and
    ``is_edge_sensitive`` is set when the rightmost hull segment spans more
    than one step, i.e. interior values near the right edge would move if the
    tabulation were extended.
    """

    values: np.ndarray
    contact_set: tuple
    is_edge_sensitive: bool

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "contact_set", tuple(int(i) for i in self.contact_set))

    def to_dict(self) -> dict:
        return {
            "values": [float(v) for v in self.values],
            "contact_set": list(self.contact_set),
            "edge_sensitive": bool(self.is_edge_sensitive),
        }


def lower_convex_envelope(y: np.ndarray) -> EnvelopeResult:
    """Lower convex envelope of the points (i, y_i), by a monotone-chain sweep."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 3:
        raise DomainError("need at least 3 points for an envelope")
    hull = [0]
    for i in range(1, n):
        # pop while the previous vertex lies on or above the new chord
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (y[b] - y[a]) * (i - a) >= (y[i] - y[a]) * (b - a):
                hull.pop()
            else:
                break
        hull.append(i)
    values = np.empty(n)
    for a, b in zip(hull[:-1], hull[1:]):
        t = np.arange(a, b + 1) - a
        values[a : b + 1] = y[a] + t * (y[b] - y[a]) / (b - a)
    # re-collect contact indices: interior points of a segment may coincide
    # with the input when the input is affine there
    contact = tuple(i for i in range(n) if values[i] >= y[i] - 1e-12 * max(1.0, abs(y[i])))
    edge = hull[-1] - hull[-2] > 1
    return EnvelopeResult(values=values, contact_set=contact, is_edge_sensitive=edge)


def increasing_minorant(scales: DerivedScales) -> tuple[np.ndarray, bool]:
    """Largest non-decreasing sequence <= m, via a right-to-left suffix-min scan.

    Returns (log-space values, edge_sensitive); the flag is set when the
    suffix minimum at the second-to-last index is attained only at the last.
    """
    m = np.asarray(scales.log_m, dtype=float)
    out = np.minimum.accumulate(m[::-1])[::-1]
    edge = len(m) >= 2 and m[-1] < m[-2]
    return out, bool(edge)


def log_convex_minorant(W: WeightSequence, weak_basis: bool = False) -> EnvelopeResult:
    """Lower convex envelope of (k, log M_k), or of (k, log(k! M_k)) when weak.

    With the weak basis this is the log-convex minorant M^(b,lc) of k! M_k,
    returned as log(k! . minorant-of-M)_k, i.e. in the k! M_k scale.
    """
    ks = W.ks.astype(float)
    y = W.log_M + log_factorial(ks) if weak_basis else W.log_M.copy()
    return lower_convex_envelope(y)


# -- check sequence bijection -------------------------------------------------


def check_scale(scales: DerivedScales) -> np.ndarray:
    """log m-check from log m by the recursion mck_{k+1} = mck_k (m_{k+1}-1)/m_k.

    Requires m_1 > 1; the recursion starts from mck_1 = m_1 - 1.  Returns
    log mck_k for k >= k_start of the scales (which must be 1).
    """
    if scales.k_start != 1:
        raise DomainError("check sequence needs scales tabulated from k = 1")
    log_m = scales.log_m
    if not log_m[0] > 0.0:
        raise DomainError("check sequence requires m_1 > 1")
    n = len(log_m)
    out = np.empty(n)
    # log(m - 1) = log m + log(1 - 1/m), stable for large m
    log_m_minus_1 = log_m + np.log1p(-np.exp(-log_m))
    out[0] = log_m_minus_1[0]
    for i in range(1, n):
        out[i] = out[i - 1] + log_m_minus_1[i] - log_m[i - 1]
    return out


def check_sequence(W: WeightSequence) -> WeightSequence:
    """The check sequence: log Mck_k = k log mck_k - log k!, Mck_0 = 1."""
    if W.k_min != 0:
        raise DomainError("check sequence needs a tabulation starting at k = 0")
    scales = DerivedScales.from_weight_sequence(W)
    log_mck = check_scale(scales)
    ks = np.arange(1, W.k_max + 1, dtype=float)
    log_Mck = ks * log_mck - log_factorial(ks)
    out = np.concatenate(([0.0], log_Mck))
    return WeightSequence(name=f"check({W.name})", k_min=0, log_M=out)


def uncheck_scale(log_mck: np.ndarray) -> np.ndarray:
    """log m from log m-check via m_k = mck_k (1 + sum_{j<=k} 1/mck_j).

    ``log_mck`` holds log mck_k for k = 1..n.  The partial sums use
    compensated (Kahan) summation.
    """
    log_mck = np.asarray(log_mck, dtype=float)
    inv = np.exp(-log_mck)
    out = np.empty_like(log_mck)
    s = 0.0
    c = 0.0
    for i in range(len(log_mck)):
        y = inv[i] - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i] = log_mck[i] + np.log1p(s)
    return out


def uncheck_sequence(Wc: WeightSequence) -> WeightSequence:
    """Inverse of check_sequence: recovers M from M-check (all mck_k > 0)."""
    if Wc.k_min != 0:
        raise DomainError("uncheck needs a tabulation starting at k = 0")
    scales = DerivedScales.from_weight_sequence(Wc)
    log_m = uncheck_scale(scales.log_m)
    ks = np.arange(1, Wc.k_max + 1, dtype=float)
    log_M = ks * log_m - log_factorial(ks)
    out = np.concatenate(([0.0], log_M))
    name = Wc.name[6:-1] if Wc.name.startswith("check(") and Wc.name.endswith(")") else f"uncheck({Wc.name})"
    return WeightSequence(name=name, k_min=0, log_M=out)


# -- composition of weight sequences ------------------------------------------


def compose_sequences(M: WeightSequence, L: WeightSequence, k_max_out: int) -> WeightSequence:
    """(M o L)_k = max over compositions alpha of k of M_j L_{a_1} ... L_{a_j}.

    Max-plus dynamic program over integer compositions, O(k^3); capped at
    k_max_out <= 500.
    """
    if k_max_out > MAX_COMPOSE_K:
        raise DomainError(f"k_max_out capped at {MAX_COMPOSE_K} (O(k^3) dynamic program)")
    if M.k_min != 0 or L.k_min != 0:
        raise DomainError("compose needs tabulations starting at k = 0")
    if M.k_max < k_max_out or L.k_max < k_max_out:
        raise DomainError("both sequences must be tabulated through k_max_out")
    n = k_max_out
    logL = L.log_M[: n + 1]
    logM = M.log_M[: n + 1]
    # G[k, j] = max over alpha in N_{>0}^j, sum alpha = k, of sum log L_{a_i}
    G = np.full((n + 1, n + 1), -np.inf)
    G[0, 0] = 0.0
    for j in range(1, n + 1):
        for k in range(j, n + 1):
            # first part a runs over 1..k-j+1; G[k-a, j-1] needs k-a >= j-1
            a_hi = k - j + 1
            G[k, j] = np.max(logL[1 : a_hi + 1] + G[k - 1 : j - 2 if j >= 2 else None : -1, j - 1])
    out = np.empty(n + 1)
    out[0] = logM[0]
    for k in range(1, n + 1):
        out[k] = np.max(logM[1 : k + 1] + G[k, 1 : k + 1])
    return WeightSequence(name=f"({M.name} o {L.name})", k_min=0, log_M=out)
