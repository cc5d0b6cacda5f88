"""The time change s(t), its remainder r(t), and the per-block rescalings.

A block at level n covers t in [1, L] in block time. The block-level
elapsed time is

    s_n(t) = (t^{p+1} - 1)/(p+1) + r_n(t),
    r_n(t) = [r(L^n t) - r(L^n)] L^{-n(p+1)}.

Two remainder models ship: zero, and a single power r(t) =
coeff (t^{p+1-delta} - 1)/(p+1-delta), i.e. a drift c(t) = t^p +
coeff t^{p-delta}. Both admit closed forms, so s_n is exact rather than
quadrature-based, and large-n factors are evaluated in log space to avoid
overflow and cancellation.
"""

import dataclasses
import math

import numpy as np

from .errors import DomainError

__all__ = [
    "TimeChange",
    "RemainderDecayRow",
    "ElapsedBracketRow",
    "check_remainder_decay",
    "check_elapsed_bracket",
]

_T_SLOP = 1e-12


@dataclasses.dataclass(frozen=True)
class TimeChange:
    p: float
    r_model: str = "zero"
    delta: float = 0.0
    coeff: float = 0.0

    def __post_init__(self):
        if not (self.p > 0) or not math.isfinite(self.p):
            raise DomainError(f"growth exponent p must be positive, got {self.p}")
        if self.r_model == "zero":
            if self.delta != 0.0 or self.coeff != 0.0:
                raise DomainError("zero remainder model takes no delta/coeff")
        elif self.r_model == "power":
            if not (0.0 < self.delta < self.p + 1.0):
                raise DomainError(
                    f"power remainder needs delta in (0, p+1), got {self.delta}"
                )
            if not (self.coeff >= 0.0) or not math.isfinite(self.coeff):
                raise DomainError(
                    f"power remainder coefficient must be >= 0, got {self.coeff}"
                )
        else:
            raise DomainError(f"unknown remainder model {self.r_model!r}")

    def _check_t(self, t, upper=None):
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 1.0 - _T_SLOP):
            raise DomainError("time must be >= 1")
        if upper is not None and np.any(t > upper * (1.0 + _T_SLOP)):
            raise DomainError(f"block time must lie in [1, {upper}]")
        return t

    def remainder(self, t):
        """r(t) for t >= 1."""
        t = self._check_t(t)
        if self.r_model == "zero":
            return np.zeros_like(t)
        e = self.p + 1.0 - self.delta
        return self.coeff * (t**e - 1.0) / e

    def elapsed(self, t):
        """s(t) = (t^{p+1} - 1)/(p+1) + r(t), the warped time since t = 1."""
        t = self._check_t(t)
        return (t ** (self.p + 1.0) - 1.0) / (self.p + 1.0) + self.remainder(t)

    def block_remainder(self, n, L, t):
        """r_n(t) = [r(L^n t) - r(L^n)] L^{-n(p+1)}, in closed form.

        For the power model this simplifies to
        coeff L^{-n delta} (t^{p+1-delta} - 1)/(p+1-delta), which is
        evaluated directly; the naive difference would overflow L^{n(p+1)}
        and cancel catastrophically for large n.
        """
        self._validate_block_args(n, L)
        t = self._check_t(t, upper=L)
        if self.r_model == "zero":
            return np.zeros_like(t)
        e = self.p + 1.0 - self.delta
        scale = math.exp(-n * self.delta * math.log(L))
        return self.coeff * scale * (t**e - 1.0) / e

    def block_elapsed(self, n, L, t):
        """s_n(t) on the block [1, L]; s_n(1) = 0 exactly."""
        t = self._check_t(t, upper=L)
        return (t ** (self.p + 1.0) - 1.0) / (self.p + 1.0) + self.block_remainder(
            n, L, t
        )

    def remainder_ratio(self, n, L):
        """rho_n = r(L^n) L^{-n(p+1)}, the level-n remainder scale."""
        self._validate_block_args(n, L)
        if self.r_model == "zero":
            return 0.0
        e = self.p + 1.0 - self.delta
        lnl = math.log(L)
        return (
            self.coeff
            / e
            * (math.exp(-n * self.delta * lnl) - math.exp(-n * (self.p + 1.0) * lnl))
        )

    @staticmethod
    def _validate_block_args(n, L):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise DomainError(f"block index must be a nonnegative integer, got {n}")
        if not (L > 1.0) or not math.isfinite(L):
            raise DomainError(f"block scale L must exceed 1, got {L}")


@dataclasses.dataclass(frozen=True)
class RemainderDecayRow:
    n: int
    drift_integral: float
    endpoint_ratio: float
    bound: float
    ok: bool


def check_remainder_decay(tc, L, n_max, d):
    """Checks that the remainder is asymptotically negligible by level.

    For n in [2, n_max], evaluates
        L^{-n(p+1)} * integral_1^{L^n} |drift remainder| dt  and
        |r(L^n)| L^{-n(p+1)}
    against the bound n^{-(p+1)/d}. Returns (rows, first_pass_n) where
    first_pass_n is the smallest n from which every later row passes
    (None if the last row fails). Failures are reported, never raised.
    """
    if n_max < 2:
        raise DomainError(f"n_max must be >= 2, got {n_max}")
    TimeChange._validate_block_args(0, L)
    exponent = (tc.p + 1.0) / d
    rows = []
    for n in range(2, n_max + 1):
        if tc.r_model == "zero":
            integral = 0.0
            endpoint = 0.0
        else:
            # |r'(t)| = coeff t^{p-delta} integrates to r(L^n) since r'>=0
            integral = tc.remainder_ratio(n, L)
            endpoint = abs(tc.remainder_ratio(n, L))
        bound = n ** (-exponent)
        rows.append(
            RemainderDecayRow(
                n=n,
                drift_integral=integral,
                endpoint_ratio=endpoint,
                bound=bound,
                ok=(integral <= bound and endpoint <= bound),
            )
        )
    first_pass = None
    for row in reversed(rows):
        if row.ok:
            first_pass = row.n
        else:
            break
    return rows, first_pass


@dataclasses.dataclass(frozen=True)
class ElapsedBracketRow:
    n: int
    ratio: float
    lo: float
    hi: float
    ok: bool


def check_elapsed_bracket(tc, L, n_max):
    """Checks 1/(6(p+1)) < s_n(L)/L^{p+1} < 3/(2(p+1)) for n in [0, n_max].

    This window on the block's warped duration is the computable stand-in
    for the abstract lower bound on admissible block scales.
    """
    TimeChange._validate_block_args(0, L)
    lo = 1.0 / (6.0 * (tc.p + 1.0))
    hi = 3.0 / (2.0 * (tc.p + 1.0))
    denom = L ** (tc.p + 1.0)
    rows = []
    for n in range(0, n_max + 1):
        ratio = float(tc.block_elapsed(n, L, L)) / denom
        rows.append(
            ElapsedBracketRow(n=n, ratio=ratio, lo=lo, hi=hi, ok=(lo < ratio < hi))
        )
    return rows
