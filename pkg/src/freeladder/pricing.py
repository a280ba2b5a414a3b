"""Schedule mathematics for the decaying price ladder.

The price paid by the buyer at zero-based position ``n`` is::

    price(n) = max(0, ceil_to_cent(gamma * exp(-beta * n) - alpha))

so the first buyer pays ``gamma - alpha`` and the price eventually rounds to
zero, after which the good is free.  Prices are :class:`Money`; the schedule
parameters themselves are plain floats.

Exact cumulative revenue is computed by counting how many positions sit at
each cent level (a binary search per level on the monotone price), which is
exact with respect to :func:`unit_price` and independent of the number of
buyers.  :func:`cumulative_revenue_geometric` and
:func:`earnings_integral_approx` are the unrounded real-valued counterparts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import CalibrationError, ParameterError, ResourceLimitError
from .money import Money, as_fraction

# Subtracted before taking the ceiling so that analytically exact cent values
# (150.00 for the first buyer) are not bumped up by floating point noise.
FP_GUARD = 1e-9

DEFAULT_SUM_CAP = 10**8

PAPER_SIMPLIFIED = "paper-simplified"
FULL_INTEGRAL = "full-integral"
CALIBRATION_MODES = (PAPER_SIMPLIFIED, FULL_INTEGRAL)

# Decay horizon of the integral approximation: exp(-5) ~ 0.7% of the start.
_HORIZON = 5.0


@dataclass(frozen=True)
class PriceSchedule:
    """Parameters of the price ladder, in dollars (``gamma``, ``alpha``) and
    per-buyer decay (``beta``)."""

    gamma: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("gamma", "alpha", "beta"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{name} must be a finite real, got {v!r}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if not self.gamma > self.alpha:
            raise ParameterError(
                f"gamma must exceed alpha (gamma={self.gamma}, alpha={self.alpha})")
        if not self.beta > 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")

    @classmethod
    def from_start(cls, starting_price: Money, beta: float, alpha: float = 0.01):
        """Build a schedule whose first buyer pays ``starting_price``."""
        return cls(gamma=starting_price.cents / 100 + alpha, alpha=alpha, beta=beta)

    @property
    def starting_price(self) -> Money:
        return unit_price(self, 0)

    def as_dict(self):
        return {"gamma": self.gamma, "alpha": self.alpha, "beta": self.beta}


def _check_position(n):
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise ParameterError(f"position must be a non-negative int, got {n!r}")


def _price_cents(s: PriceSchedule, n: int) -> int:
    p = (s.gamma * math.exp(-s.beta * n) - s.alpha) * 100.0
    c = math.ceil(p - FP_GUARD)
    return c if c > 0 else 0


def unit_price(schedule: PriceSchedule, n: int) -> Money:
    """Price charged to the buyer at position ``n`` (first buyer is 0)."""
    _check_position(n)
    return Money(_price_cents(schedule, n))


def _first_below(s: PriceSchedule, level: int) -> int:
    """Smallest position whose price is strictly below ``level`` cents."""
    floor_dollars = s.alpha + (level - 1) / 100.0
    if s.gamma <= floor_dollars:
        guess = 0
    else:
        guess = math.log(s.gamma / floor_dollars) / s.beta
        guess = 0 if guess <= 0 else min(math.ceil(guess), 2**62)
    k = int(guess)

    # Gallop outwards from the analytic guess until the boundary is
    # bracketed: lo == -1 or price(lo) >= level, and price(hi) < level.
    step = 1
    if _price_cents(s, k) < level:
        hi, lo = k, k - 1
        while lo >= 0 and _price_cents(s, lo) < level:
            hi = lo
            step *= 2
            lo = k - step
        lo = max(lo, -1)
    else:
        lo, hi = k, k + 1
        while _price_cents(s, hi) >= level:
            lo = hi
            step *= 2
            hi = k + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _price_cents(s, mid) < level:
            hi = mid
        else:
            lo = mid
    return hi


def free_threshold(schedule: PriceSchedule) -> int:
    """Smallest position at which the rounded price is zero."""
    return _first_below(schedule, 1)


def analytic_free_threshold(schedule: PriceSchedule) -> float:
    """Unrounded ``ln(gamma/alpha)/beta``; close to, but not, the operational threshold."""
    return math.log(schedule.gamma / schedule.alpha) / schedule.beta


def buyers_to_free_approx(schedule: PriceSchedule) -> float:
    """The coarse ``5/beta`` estimate of how many buyers make the good free."""
    return _HORIZON / schedule.beta


def price_level_counts(schedule: PriceSchedule, n: int) -> dict[int, int]:
    """Map each positive cent price to how many of positions ``0..n-1`` pay it."""
    _check_position(n)
    top = _price_cents(schedule, 0)
    m = min(n, free_threshold(schedule)) if top else 0
    counts = {}
    if m == 0:
        return counts
    if m <= 8 * top:
        for k in range(m):
            c = _price_cents(schedule, k)
            counts[c] = counts.get(c, 0) + 1
        return counts
    # Positions 0..b-1 pay at least `level`, where b = _first_below(level).
    prev = 0
    for level in range(top, 0, -1):
        b = min(m, _first_below(schedule, level))
        if b > prev:
            counts[level] = b - prev
            prev = b
        if prev == m:
            break
    return counts


def cumulative_revenue_exact(schedule: PriceSchedule, n: int,
                             cap: int = DEFAULT_SUM_CAP) -> Money:
    """Exact gross collected from the first ``n`` buyers.

    Positions at or beyond the free threshold contribute nothing, so the cap
    applies to the number of paying positions actually summed.
    """
    _check_position(n)
    effective = min(n, free_threshold(schedule))
    if effective > cap:
        raise ResourceLimitError(
            f"exact sum over {effective} paying positions exceeds cap {cap}; "
            "use cumulative_revenue_geometric")
    total = 0
    for cents, count in price_level_counts(schedule, effective).items():
        total += cents * count
    return Money(total)


def total_revenue_exact(schedule: PriceSchedule, cap: int = DEFAULT_SUM_CAP) -> Money:
    """Gross over the whole paid life of the good."""
    return cumulative_revenue_exact(schedule, free_threshold(schedule), cap=cap)


def cumulative_revenue_geometric(schedule: PriceSchedule, n: int) -> float:
    """Unrounded revenue in dollars: a geometric series minus ``alpha * n``."""
    _check_position(n)
    if n == 0:
        return 0.0
    g, a, b = schedule.gamma, schedule.alpha, schedule.beta
    return g * math.expm1(-b * n) / math.expm1(-b) - a * n


def earnings_integral_approx(schedule: PriceSchedule) -> float:
    """Integral of the unrounded price from 0 to ``5/beta``, in dollars.

    Equals ``PRICE(5/beta) - PRICE(0)`` for the antiderivative
    ``PRICE(n) = -gamma/beta * exp(-beta*n) - alpha*n``.
    """
    g, a, b = schedule.gamma, schedule.alpha, schedule.beta
    return g / b * (1.0 - math.exp(-_HORIZON)) - _HORIZON * a / b


def _check_rates(gamma, alpha):
    PriceSchedule(gamma, alpha, 1.0)


def calibrate_beta_approx(gamma: float, alpha: float, target_gross: Money,
                          mode: str = PAPER_SIMPLIFIED) -> float:
    """Decay rate whose approximate earnings equal ``target_gross``.

    ``paper-simplified`` uses ``earnings ~ gamma/beta``; ``full-integral``
    inverts :func:`earnings_integral_approx` exactly.
    """
    _check_rates(gamma, alpha)
    if not isinstance(target_gross, Money) or target_gross.cents <= 0:
        raise ParameterError(f"target gross must be positive Money, got {target_gross!r}")
    target = target_gross.cents / 100
    if mode == PAPER_SIMPLIFIED:
        return gamma / target
    if mode == FULL_INTEGRAL:
        numerator = gamma * (1.0 - math.exp(-_HORIZON)) - _HORIZON * alpha
        if numerator <= 0:
            raise ParameterError(
                "full-integral mode needs gamma*(1-e^-5) > 5*alpha; "
                f"got gamma={gamma}, alpha={alpha}")
        return numerator / target
    raise ParameterError(f"unknown calibration mode {mode!r}; expected one of {CALIBRATION_MODES}")


def calibrate_beta_exact(gamma: float, alpha: float, target_gross: Money,
                         rel_tol: float = 1e-3, bracket: tuple[float, float] | None = None,
                         max_iter: int = 400, cap: int = DEFAULT_SUM_CAP,
                         objective=None) -> float:
    """Bisect on beta until the exact lifetime gross is within ``rel_tol`` of the target.

    Lifetime gross is non-increasing in beta (every rounded price is), so a
    bracket ``[lo, hi]`` with ``gross(lo) >= target >= gross(hi)`` always
    shrinks onto a solution, unless the gross jumps over the tolerance band
    (very small targets), which is reported as a :class:`CalibrationError`.
    The default bracket spans a factor of 10 either side of the
    full-integral estimate.

    ``objective(schedule) -> cents`` replaces lifetime gross as the quantity
    matched to the target; it must also be non-increasing in beta.
    """
    _check_rates(gamma, alpha)
    if not isinstance(target_gross, Money) or target_gross.cents <= 0:
        raise ParameterError(f"target gross must be positive Money, got {target_gross!r}")
    if not (0 < rel_tol <= 0.1):
        raise ParameterError(f"rel_tol must be in (0, 0.1], got {rel_tol}")

    target = target_gross.cents
    band = rel_tol * target

    def gross(beta):
        schedule = PriceSchedule(gamma, alpha, beta)
        if objective is not None:
            return objective(schedule)
        return total_revenue_exact(schedule, cap=cap).cents

    if bracket is None:
        try:
            beta0 = calibrate_beta_approx(gamma, alpha, target_gross, FULL_INTEGRAL)
        except ParameterError:
            beta0 = calibrate_beta_approx(gamma, alpha, target_gross, PAPER_SIMPLIFIED)
        lo, hi = beta0 / 10, beta0 * 10
        # keep the longest ladder in the bracket under the summation cap
        beta_min = math.log(gamma / alpha) / cap * (1 + 1e-6)
        if lo < beta_min:
            lo = min(beta_min, hi / 2)
    else:
        lo, hi = bracket
        if not (0 < lo < hi) or not math.isfinite(hi):
            raise ParameterError(f"bracket must satisfy 0 < lo < hi, got {bracket}")

    g_lo, g_hi = gross(lo), gross(hi)
    if abs(g_lo - target) <= band:
        return lo
    if abs(g_hi - target) <= band:
        return hi
    if not (g_hi < target < g_lo):
        raise CalibrationError(
            f"target {Money(target)} outside achievable range "
            f"[{Money(g_hi)}, {Money(g_lo)}] for beta in [{lo:.6g}, {hi:.6g}]",
            achievable=(Money(g_hi), Money(g_lo)))

    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        g = gross(mid)
        if abs(g - target) <= band:
            return mid
        if g > target:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        f"gross jumps across the +/-{rel_tol:g} band around {Money(target)} "
        f"near beta={lo:.6g}; the target is not resolvable at this tolerance",
        achievable=(Money(gross(hi)), Money(gross(lo))))


def artist_gross_from_payout(target_artist_payout: Money, artist_fraction) -> Money:
    """Smallest gross whose artist share covers ``target_artist_payout``."""
    f = as_fraction(artist_fraction)
    if not (0 < f <= 1):
        raise ParameterError(f"artist fraction must be in (0, 1], got {f}")
    return Money(-(-target_artist_payout.cents * f.denominator // f.numerator))


@dataclass(frozen=True)
class LegacyDeal:
    """Retail CD economics: what is left after the store and distributor,
    of which the artist gets ``artist_rate``."""

    retail: Money
    store_cut: Money
    distributor_cut: Money
    artist_rate: Fraction

    def __post_init__(self):
        object.__setattr__(self, "artist_rate", as_fraction(self.artist_rate))
        if self.store_cut.cents + self.distributor_cut.cents > self.retail.cents:
            raise ParameterError("store and distributor cuts exceed the retail price")
        if not (0 <= self.artist_rate <= 1):
            raise ParameterError(f"artist rate must be in [0, 1], got {self.artist_rate}")

    @property
    def remaining(self) -> Money:
        return self.retail - self.store_cut - self.distributor_cut


def legacy_artist_share(deal: LegacyDeal, units: int) -> Money:
    """Artist money from ``units`` legacy sales; per-unit share rounded half-up to the cent."""
    if isinstance(units, bool) or not isinstance(units, int) or units < 0:
        raise ParameterError(f"units must be a non-negative int, got {units!r}")
    per_unit = math.floor(deal.artist_rate * deal.remaining.cents + Fraction(1, 2))
    return Money(per_unit * units)
