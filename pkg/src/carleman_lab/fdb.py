"""Exact truncated formal-power-series arithmetic with growth certificates.

Coefficients follow the derivative normalization: the stored f_k corresponds
to the k-th derivative, so the Taylor coefficient is f_k / k!.  When every
input coefficient is an integer or Fraction the arithmetic runs over exact
rationals, which keeps e.g. Bell numbers exact far past the 2^53 threshold
where f64 integer arithmetic silently rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial, isfinite, lgamma
from typing import Optional, Sequence

import numpy as np

from .seqcore import DomainError, MembershipCertificate, WeightSequence, fm_membership
from .envelope import compose_sequences

__all__ = [
    "TruncatedSeries",
    "compose_series",
    "multiply_series",
    "verify_composition_bound",
    "certificate_grid",
    "DEFAULT_TRUNCATION",
]

DEFAULT_TRUNCATION = 32

_EXACT_TYPES = (int, Fraction)


def _is_exact(coeffs) -> bool:
    return all(isinstance(c, _EXACT_TYPES) for c in coeffs)


def _simplify(c):
    """Collapse integral Fractions back to int."""
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    return c


@dataclass(frozen=True)
class TruncatedSeries:
    """Coefficients f_0..f_N in derivative normalization, plus an optional
    (C, rho, M) growth certificate asserting |f_k| <= C rho^k k! M_k."""

    coeffs: tuple
    certificate: Optional[MembershipCertificate] = None

    def __post_init__(self):
        cs = tuple(_simplify(c) for c in self.coeffs)
        if len(cs) < 2:
            raise DomainError("a truncated series needs at least 2 coefficients (N >= 1)")
        for c in cs:
            if isinstance(c, float) and not isfinite(c):
                raise DomainError("non-finite coefficient")
        object.__setattr__(self, "coeffs", cs)
        if self.certificate is not None:
            cert = self.certificate
            got = fm_membership([float(c) for c in cs], cert.seq, cert.rho)
            if got > cert.C * (1.0 + 1e-12):
                raise DomainError(
                    f"certificate violated on stored prefix: needs C >= {got}, has {cert.C}"
                )

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_exact(self) -> bool:
        return _is_exact(self.coeffs)

    def to_dict(self) -> dict:
        cert = None
        if self.certificate is not None:
            cert = {
                "C": float(self.certificate.C),
                "rho": float(self.certificate.rho),
                "seq": self.certificate.seq.name,
            }
        return {"coeffs": [float(c) for c in self.coeffs], "certificate": cert}


def compose_series(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """Coefficients of f(g(x)); requires g_0 = 0.

    Output order is min(order f, order g) - 1 + 1 coefficients, i.e. indices
    0 .. min(N_f, N_g) - 1.  Computed through iterated Cauchy products of the
    Taylor-normalized series (Horner over powers of g), O(N^3).
    """
    if g.coeffs[0] != 0:
        raise DomainError("composition requires g_0 = 0")
    n_out = min(f.order, g.order) - 1
    if n_out < 1:
        raise DomainError("series too short to compose")
    exact = f.is_exact and g.is_exact
    one = Fraction(1) if exact else 1.0
    a = [one * f.coeffs[k] / factorial(k) if exact else float(f.coeffs[k]) / factorial(k)
         for k in range(n_out + 1)]
    b = [one * g.coeffs[k] / factorial(k) if exact else float(g.coeffs[k]) / factorial(k)
         for k in range(n_out + 1)]
    zero = Fraction(0) if exact else 0.0

    # c = sum_j a_j b^j, accumulated via Horner: c = a_n; c = c*b + a_j
    c = [zero] * (n_out + 1)
    c[0] = a[n_out]
    for j in range(n_out - 1, -1, -1):
        # multiply by b (valuation >= 1) and truncate
        new = [zero] * (n_out + 1)
        for i in range(n_out + 1):
            if c[i] == 0:
                continue
            ci = c[i]
            for m in range(1, n_out + 1 - i):
                new[i + m] += ci * b[m]
        new[0] += a[j]
        c = new
    out = [c[k] * factorial(k) for k in range(n_out + 1)]
    return TruncatedSeries(tuple(out))


def multiply_series(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """(fg)_k = sum_i binom(k, i) f_i g_{k-i} on the common prefix.

    When both factors carry certificates over the same weakly log-convex
    weight sequence, the product gets the combined certificate
    (C_f C_g M_0, rho_f + rho_g), re-verified on the stored prefix.
    """
    n_out = min(f.order, g.order)
    exact = f.is_exact and g.is_exact
    out = []
    for k in range(n_out + 1):
        s = Fraction(0) if exact else 0.0
        for i in range(k + 1):
            fi, gk = f.coeffs[i], g.coeffs[k - i]
            if exact:
                s += comb(k, i) * fi * gk
            else:
                s += comb(k, i) * float(fi) * float(gk)
        out.append(s)
    cert = None
    if (
        f.certificate is not None
        and g.certificate is not None
        and f.certificate.seq is g.certificate.seq
    ):
        W = f.certificate.seq
        M0 = float(np.exp(W.log_M[0]))
        cert = MembershipCertificate(
            C=f.certificate.C * g.certificate.C * M0,
            rho=f.certificate.rho + g.certificate.rho,
            seq=W,
        )
    return TruncatedSeries(tuple(out), certificate=cert)


def verify_composition_bound(f: TruncatedSeries, g: TruncatedSeries) -> dict:
    """Check |(f o g)_k| <= C* tau^k k! (M o L)_k for 1 <= k <= N.

    tau = rho_g (1 + rho_f C_g) and C* = rho_f C_f C_g / (1 + rho_f C_g) are
    the constants produced by the composition estimate; the bound is asserted
    for k >= 1 (the k = 0 coefficient is not covered by the estimate).
    Returns a report with per-k log-space slack.
    """
    if f.certificate is None or g.certificate is None:
        raise DomainError("both series need growth certificates")
    if g.coeffs[0] != 0:
        raise DomainError("composition requires g_0 = 0")
    M = f.certificate.seq
    L = g.certificate.seq
    fg = compose_series(f, g)
    n = fg.order
    ML = compose_sequences(M, L, n)
    rho_f, C_f = f.certificate.rho, f.certificate.C
    rho_g, C_g = g.certificate.rho, g.certificate.C
    tau = rho_g * (1.0 + rho_f * C_g)
    C_star = rho_f * C_f * C_g / (1.0 + rho_f * C_g)
    slack = []
    violations = []
    lossy = False
    for k in range(1, n + 1):
        ck = fg.coeffs[k]
        if isinstance(ck, float) and abs(ck) > 2.0**53:
            lossy = True
        log_bound = (
            np.log(C_star) + k * np.log(tau) + lgamma(k + 1) + ML.log_M[k]
        )
        if ck == 0:
            sl = float("inf")
        else:
            sl = float(log_bound - np.log(abs(float(ck))))
        slack.append(sl)
        if sl < -1e-9:
            violations.append(k)
    return {
        "tau": tau,
        "C_star": C_star,
        "order": n,
        "log_slack": slack,  # slack[i] is for k = i + 1
        "violations": violations,
        "ok": not violations,
        "lossy_float_coefficients": lossy,
    }


def certificate_grid(coeffs: Sequence[float], W: WeightSequence) -> list[tuple[float, float]]:
    """(rho, smallest C) pairs over the dyadic grid rho = 2^i, -8 <= i <= 8."""
    out = []
    fl = [float(c) for c in coeffs]
    for i in range(-8, 9):
        rho = 2.0**i
        out.append((rho, fm_membership(fl, W, rho)))
    return out
