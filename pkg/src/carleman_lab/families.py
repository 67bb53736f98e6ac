"""Built-in weight-sequence families.

Covers the constant (real analytic) sequence, Gevrey sequences, the
Q_k = (k log(k+e))^k / k! family with its primed variants, and the
iterated-logarithm families Q^{delta,n} together with their hat / p
companion scales.  All tabulations are produced in log-space.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, e as E, exp, lgamma, log

import numpy as np

from .seqcore import DomainError, WeightSequence, log_factorial, tabulate
from .envelope import uncheck_scale

__all__ = [
    "FamilySpec",
    "kappa",
    "make_family",
    "harmonic_hat",
    "hat_scale",
    "p_scale",
    "iterated_log",
    "q_scale",
    "FAMILY_REGISTRY",
    "parse_family",
    "builtin_sequences",
]

# kappa_n = ceil(e ^^ n); kappa_3 was pinned with an extended-precision
# exponential (the f64 evaluation agrees: exp(exp(e)) = 3814279.104760...)
_KAPPA = {1: 3, 2: 16, 3: 3814280}

MAX_TOWER = 3


def kappa(n: int) -> int:
    """ceil(e ^^ n), the index offset of the n-fold iterated-log families."""
    if not 1 <= n <= MAX_TOWER:
        raise DomainError(f"kappa supported only for 1 <= n <= {MAX_TOWER}")
    return _KAPPA[n]


def iterated_log(x: np.ndarray, n: int) -> np.ndarray:
    """n-fold iterated natural logarithm; caller guarantees the domain."""
    y = np.asarray(x, dtype=float)
    for _ in range(n):
        y = np.log(y)
    return y


def q_scale(delta: float, n: int, ks: np.ndarray) -> np.ndarray:
    """q^{delta,n}_k for integer indices ks >= kappa_n.

    q^{1,1}_k = k log k; q^{delta,n}_k = q^{1,n-1}_k (log^n k)^delta.
    """
    if not 0.0 < delta <= 1.0:
        raise DomainError("delta must be in (0, 1]")
    if not 1 <= n <= MAX_TOWER:
        raise DomainError(f"n must be in [1, {MAX_TOWER}]")
    ks = np.asarray(ks, dtype=float)
    if np.any(ks < kappa(n)):
        raise DomainError(f"q^{{delta,{n}}} defined only for k >= kappa_{n} = {kappa(n)}")
    if n == 1:
        if delta != 1.0:
            raise DomainError("only delta = 1 is defined at tower depth 1")
        return ks * np.log(ks)
    return q_scale(1.0, n - 1, ks) * iterated_log(ks, n) ** delta


@dataclass(frozen=True)
class FamilySpec:
    """kind + parameters of a built-in family."""

    kind: str
    s: float = 0.0      # gevrey exponent
    delta: float = 1.0  # iterated-log exponent
    n: int = 1          # tower depth

    KINDS = (
        "analytic",
        "gevrey",
        "q18",
        "q18_prime",
        "q18_doubleprime",
        "q_delta_n",
        "qhat_1_n",
        "p_delta_n",
    )

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown family kind {self.kind!r}")
        if self.kind == "gevrey" and not self.s > 0:
            raise DomainError("gevrey requires s > 0")
        if self.kind in ("q_delta_n", "p_delta_n") and not 0 < self.delta <= 1:
            raise DomainError("delta must be in (0, 1]")
        if self.kind in ("q_delta_n", "qhat_1_n", "p_delta_n") and not 1 <= self.n <= MAX_TOWER:
            raise DomainError(f"tower depth n must be in [1, {MAX_TOWER}]")

    def label(self) -> str:
        if self.kind == "gevrey":
            return f"gevrey:{self.s:g}"
        if self.kind == "q_delta_n":
            return f"q:{self.delta:g}:{self.n}"
        if self.kind == "qhat_1_n":
            return f"qhat:1:{self.n}"
        if self.kind == "p_delta_n":
            return f"p:{self.delta:g}:{self.n}"
        return {"q18": "q18", "q18_prime": "q18p", "q18_doubleprime": "q18pp", "analytic": "analytic"}[self.kind]


def _shifted_weight_sequence(name, scale_at, kap, k_max, claims=()):
    """Weight sequence M_0 = 1, M_k = scale(k-1+kap)^{k-1+kap} / (k-1+kap)!."""
    ks = np.arange(1, k_max + 1, dtype=float)
    idx = ks - 1.0 + kap
    log_scale = scale_at(idx)
    log_M = idx * log_scale - log_factorial(idx)
    out = np.concatenate(([0.0], log_M))
    return WeightSequence(name=name, k_min=0, log_M=out, claims=frozenset(claims))


def make_family(spec: FamilySpec, k_max: int = 10_000) -> WeightSequence:
    """Tabulate a built-in family through k_max (log-space)."""
    if k_max < 2:
        raise DomainError("k_max must be at least 2")
    name = spec.label()
    if spec.kind == "analytic":
        return tabulate(
            lambda k: 0.0, k_max, name=name,
            claims={"log-convex", "quasianalytic", "moderate-growth", "derivation-closed"},
        )
    if spec.kind == "gevrey":
        s = spec.s
        return tabulate(
            lambda k: s * lgamma(k + 1), k_max, name=name,
            claims={"log-convex", "non-quasianalytic", "moderate-growth", "derivation-closed"},
        )
    if spec.kind == "q18":
        def logq18(k):
            if k == 0:
                return 0.0
            return k * log(k * log(k + E)) - lgamma(k + 1)
        return tabulate(
            logq18, k_max, name=name,
            claims={"log-convex", "quasianalytic", "moderate-growth"},
        )
    if spec.kind == "q18_prime":
        # check scale is exactly mck_k = k; Q' recovered by the uncheck map
        ks = np.arange(1, k_max + 1, dtype=float)
        log_m = uncheck_scale(np.log(ks))
        log_M = ks * log_m - log_factorial(ks)
        out = np.concatenate(([0.0], log_M))
        return WeightSequence(name=name, k_min=0, log_M=out, claims=frozenset({"quasianalytic"}))
    if spec.kind == "q18_doubleprime":
        return tabulate(
            lambda k: k * log(log(k + E)), k_max, name=name,
            claims={"log-convex", "quasianalytic"},
        )
    if spec.kind == "q_delta_n":
        kap = kappa(spec.n)
        claims = {"log-convex", "quasianalytic", "moderate-growth"}
        return _shifted_weight_sequence(
            name, lambda idx: np.log(q_scale(spec.delta, spec.n, idx)), kap, k_max, claims
        )
    if spec.kind in ("qhat_1_n", "p_delta_n"):
        return harmonic_hat(spec, k_max)[0]
    raise DomainError(f"unknown family kind {spec.kind!r}")  # pragma: no cover


def _kahan_cumsum(terms: np.ndarray) -> np.ndarray:
    """Compensated running sum for slowly convergent series."""
    out = np.empty_like(terms)
    s = 0.0
    c = 0.0
    for i, t in enumerate(terms):
        y = t - c
        u = s + y
        c = (u - s) - y
        s = u
        out[i] = s
    return out


def hat_scale(n: int, k_hi: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """hat-q^{1,n}_k = q^{1,n-1}_k (1 + sum_{j=kappa_n}^k 1/q^{1,n-1}_j).

    Returns (ks, hat values, plain q^{1,n} values) for ks = kappa_n .. k_hi.
    """
    if n < 2:
        raise DomainError("hat scale needs tower depth n >= 2")
    kap = kappa(n)
    if k_hi < kap:
        raise DomainError(f"k_hi must be >= kappa_{n} = {kap}")
    ks = np.arange(kap, k_hi + 1, dtype=float)
    base = q_scale(1.0, n - 1, ks)
    sums = _kahan_cumsum(1.0 / base)
    hat = base * (1.0 + sums)
    plain = q_scale(1.0, n, ks)
    return ks, hat, plain


def p_scale(delta: float, n: int, k_hi: int) -> tuple[np.ndarray, np.ndarray]:
    """p^{delta,n}_k for ks = start .. k_hi.

    For 0 < delta < 1: q^{delta,n}_k (1 + sum_{j=kappa_n}^k 1/q^{delta,n}_j),
    from kappa_n.  For delta = 1: hat-q^{1,n+1}, which starts at kappa_{n+1}.
    """
    if delta == 1.0:
        ks, hat, _ = hat_scale(n + 1, k_hi)
        return ks, hat
    kap = kappa(n)
    if k_hi < kap:
        raise DomainError(f"k_hi must be >= kappa_{n} = {kap}")
    ks = np.arange(kap, k_hi + 1, dtype=float)
    base = q_scale(delta, n, ks)
    sums = _kahan_cumsum(1.0 / base)
    return ks, base * (1.0 + sums)


def harmonic_hat(spec: FamilySpec, k_max: int = 10_000) -> tuple[WeightSequence, np.ndarray, np.ndarray]:
    """Weight sequence built on the hat / p scale, plus the sandwich ratio.

    Returns (sequence, ks, ratio) where ratio_k compares the hat/p scale with
    its plain counterpart: hat-q^{1,n}_k / q^{1,n}_k, respectively
    p^{delta,n}_k / q^{delta,n}_k.
    """
    if spec.kind == "qhat_1_n":
        n = spec.n
        kap = kappa(n)
        k_hi = k_max - 1 + kap
        ks, hat, plain = hat_scale(n, k_hi)
        ratio = hat / plain
        scale_log = np.log(hat)
    elif spec.kind == "p_delta_n":
        n, delta = spec.n, spec.delta
        if delta == 1.0:
            # p^{1,n} = hat-q^{1,n+1}; the weight sequence is the depth-(n+1) hat
            seq, ks, ratio = harmonic_hat(FamilySpec("qhat_1_n", n=n + 1), k_max)
            return seq.with_name(spec.label()), ks, ratio
        kap = kappa(n)
        k_hi = k_max - 1 + kap
        ks, pvals = p_scale(delta, n, k_hi)
        ratio = pvals / q_scale(delta, n, ks)
        scale_log = np.log(pvals)
    else:
        raise DomainError("harmonic_hat expects a qhat_1_n or p_delta_n spec")
    idx = ks
    log_M = idx * scale_log - log_factorial(idx)
    out = np.concatenate(([0.0], log_M[:k_max]))
    seq = WeightSequence(name=spec.label(), k_min=0, log_M=out, claims=frozenset({"quasianalytic"}))
    return seq, ks, ratio


# -- registry ----------------------------------------------------------------

FAMILY_REGISTRY = {
    "analytic": (FamilySpec("analytic"), "constant sequence (real analytic class)"),
    "gevrey:S": (None, "Gevrey sequence M_k = (k!)^s, pass e.g. gevrey:1"),
    "q18": (FamilySpec("q18"), "Q_k = (k log(k+e))^k / k!"),
    "q18p": (FamilySpec("q18_prime"), "Q' with check scale exactly k"),
    "q18pp": (FamilySpec("q18_doubleprime"), "Q''_k = (log(k+e))^k"),
    "q:D:N": (None, "iterated-log family Q^{delta,n}, e.g. q:0.5:2"),
    "qhat:1:N": (None, "hat companion of Q^{1,n}, e.g. qhat:1:2"),
    "p:D:N": (None, "slow companion family p^{delta,n}, e.g. p:0.3:2"),
}


def parse_family(token: str) -> FamilySpec:
    """Parse a CLI family token like 'q18', 'gevrey:1', 'q:0.5:2'."""
    parts = token.split(":")
    head = parts[0]
    try:
        if head == "analytic" and len(parts) == 1:
            return FamilySpec("analytic")
        if head == "gevrey" and len(parts) == 2:
            return FamilySpec("gevrey", s=float(parts[1]))
        if head == "q18" and len(parts) == 1:
            return FamilySpec("q18")
        if head == "q18p" and len(parts) == 1:
            return FamilySpec("q18_prime")
        if head == "q18pp" and len(parts) == 1:
            return FamilySpec("q18_doubleprime")
        if head == "q" and len(parts) == 3:
            return FamilySpec("q_delta_n", delta=float(parts[1]), n=int(parts[2]))
        if head == "qhat" and len(parts) == 3 and parts[1] == "1":
            return FamilySpec("qhat_1_n", n=int(parts[2]))
        if head == "p" and len(parts) == 3:
            return FamilySpec("p_delta_n", delta=float(parts[1]), n=int(parts[2]))
    except ValueError as exc:
        raise DomainError(f"bad family token {token!r}: {exc}") from exc
    raise DomainError(f"unknown family {token!r}")


def builtin_sequences(k_max: int = 10_000) -> dict[str, WeightSequence]:
    """The standard battery used by diagnostics and the test suite."""
    specs = [
        FamilySpec("analytic"),
        FamilySpec("gevrey", s=0.5),
        FamilySpec("gevrey", s=1.0),
        FamilySpec("gevrey", s=2.0),
        FamilySpec("q18"),
        FamilySpec("q18_prime"),
        FamilySpec("q18_doubleprime"),
        FamilySpec("q_delta_n", delta=1.0, n=1),
        FamilySpec("q_delta_n", delta=0.5, n=2),
        FamilySpec("q_delta_n", delta=1.0, n=2),
        FamilySpec("q_delta_n", delta=1.0, n=3),
    ]
    return {sp.label(): make_family(sp, k_max) for sp in specs}
