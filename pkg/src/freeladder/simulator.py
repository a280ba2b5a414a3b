"""Synthetic demand driven through the real ledger.

Each step draws a number of fresh prospects; each one draws a
willingness-to-pay (WTP) in dollars and buys iff the quoted price is at most
that. Refusing prospects never come back. The run stops at ``max_steps``
or as soon as the good becomes free.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError
from .ledger import Ledger, SplitPolicy, Status
from .money import Money

GENERATOR = "numpy.random.PCG64"


@dataclass(frozen=True)
class DemandModel:
    """``arrivals_per_step`` is a fixed count when it is an int, a Poisson
    mean when it is a float. ``wtp`` is ``("uniform", lo, hi)``,
    ``("exponential", mean)`` or ``("point", value)``, in dollars."""

    arrivals_per_step: int | float
    wtp: tuple
    seed: int = 0

    def __post_init__(self):
        a = self.arrivals_per_step
        if isinstance(a, bool) or not isinstance(a, (int, float)) or a < 0:
            raise ParameterError(f"arrivals_per_step must be >= 0, got {a!r}")
        object.__setattr__(self, "wtp", tuple(self.wtp))
        kind, *params = self.wtp
        expected = {"uniform": 2, "exponential": 1, "point": 1}
        if kind not in expected or len(params) != expected[kind]:
            raise ParameterError(f"bad WTP distribution {self.wtp!r}")
        if kind == "uniform":
            lo, hi = params
            if not (0 <= lo < hi):
                raise ParameterError(f"uniform WTP needs 0 <= lo < hi, got {params}")
        elif kind == "exponential" and not params[0] > 0:
            raise ParameterError("exponential WTP mean must be positive")
        elif kind == "point" and not params[0] >= 0:
            raise ParameterError("point WTP must be non-negative")
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2**64):
            raise ParameterError(f"seed must be a 64-bit unsigned int, got {self.seed!r}")

    @classmethod
    def from_dict(cls, d):
        wtp = d["wtp"]
        if isinstance(wtp, dict):
            kind = wtp["kind"]
            order = {"uniform": ("lo", "hi"), "exponential": ("mean",), "point": ("value",)}
            if kind not in order:
                raise ParameterError(f"unknown WTP kind {kind!r}")
            wtp = (kind, *(float(wtp[k]) for k in order[kind]))
        return cls(d["arrivals_per_step"], tuple(wtp), int(d.get("seed", 0)))

    def _draw_wtp(self, rng, k):
        kind, *p = self.wtp
        if kind == "uniform":
            return rng.uniform(p[0], p[1], size=k)
        if kind == "exponential":
            return rng.exponential(p[0], size=k)
        return np.full(k, float(p[0]))

    def _draw_arrivals(self, rng):
        a = self.arrivals_per_step
        if isinstance(a, int):
            return a
        return int(rng.poisson(a))


@dataclass(frozen=True)
class TrajectoryRow:
    step: int
    arrivals: int
    purchases_this_step: int
    sold_total: int
    current_price: Money
    gross_total: Money
    artist_total: Money
    foundation_pool: Money
    status: Status

    def as_csv_row(self):
        return [self.step, self.arrivals, self.purchases_this_step, self.sold_total,
                self.current_price.cents, self.gross_total.cents, self.artist_total.cents,
                self.foundation_pool.cents, self.status.value]


CSV_HEADER = ["step", "arrivals", "purchases_this_step", "sold_total", "current_price_cents",
              "gross_total_cents", "artist_total_cents", "foundation_pool_cents", "status"]


@dataclass(frozen=True)
class Summary:
    time_to_free: int | None
    gross: Money
    artist_total: Money
    mean_price_paid: float | None
    sold: int

    def as_dict(self):
        d = asdict(self)
        d["gross"] = self.gross.cents
        d["artist_total"] = self.artist_total.cents
        return d


def run(good_params: dict, demand: DemandModel, max_steps: int, *,
        ledger: Ledger | None = None, policy: SplitPolicy | None = None,
        on_arrival=None) -> list[TrajectoryRow]:
    """Simulate up to ``max_steps`` steps of demand for one new good.

    ``good_params`` are keyword arguments for :meth:`Ledger.create_good`.
    ``on_arrival(price_cents, wtp, bought)`` is called for every prospect.
    """
    if isinstance(max_steps, bool) or not isinstance(max_steps, int) or max_steps < 0:
        raise ParameterError(f"max_steps must be a non-negative int, got {max_steps!r}")
    ledger = ledger if ledger is not None else Ledger(policy=policy)
    params = dict(good_params)
    params.setdefault("title", "simulated")
    params.setdefault("artist_id", "artist")
    good = ledger.create_good(**params)
    rng = np.random.Generator(np.random.PCG64(demand.seed))

    rows = []
    buyer = 0
    for step in range(1, max_steps + 1):
        if good.status is Status.FREE:
            break
        arrivals = demand._draw_arrivals(rng)
        wtps = demand._draw_wtp(rng, arrivals)
        bought = 0
        for w in wtps:
            if good.status is Status.FREE:
                break
            price = ledger.quote(good.id).current_price.cents
            accept = price <= w * 100
            if accept:
                buyer += 1
                ledger.purchase(good.id, f"b{buyer}")
                bought += 1
            if on_arrival is not None:
                on_arrival(price, float(w), accept)
        q = ledger.quote(good.id)
        t = ledger.ledger_totals(good.id)
        rows.append(TrajectoryRow(step, arrivals, bought, good.sold, q.current_price,
                                  t.gross, t.artist, t.foundation, good.status))
    return rows


def summarize(trajectory: list[TrajectoryRow]) -> Summary:
    if not trajectory:
        raise ParameterError("cannot summarize an empty trajectory")
    last = trajectory[-1]
    time_to_free = next((r.step for r in trajectory if r.status is Status.FREE), None)
    mean = last.gross_total.cents / 100 / last.sold_total if last.sold_total else None
    return Summary(time_to_free, last.gross_total, last.artist_total, mean, last.sold_total)


def write_csv(trajectory, out, seed: int | None = None):
    """Write the trajectory as CSV, preceded by a ``#`` line naming the generator."""
    out.write(f"# generator={GENERATOR} seed={seed}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in trajectory:
        w.writerow(row.as_csv_row())


def trajectory_csv(trajectory, seed=None) -> str:
    buf = io.StringIO()
    write_csv(trajectory, buf, seed)
    return buf.getvalue()


def load_scenario(path) -> tuple[dict, DemandModel, int]:
    """Read a JSON scenario: ``{"good": {...}, "demand": {...}, "max_steps": N}``.

    Money fields of the good are given in cents (``starting_price_cents``,
    ``target_artist_payout_cents``).
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        good = dict(doc["good"])
        for key in ("starting_price", "target_artist_payout"):
            if f"{key}_cents" in good:
                good[key] = Money(int(good.pop(f"{key}_cents")))
        allowed = {"title", "artist_id", "gamma", "alpha", "beta", "starting_price",
                   "target_artist_payout"}
        unknown = set(good) - allowed
        if unknown:
            raise ParameterError(f"unknown good fields {sorted(unknown)}")
        return good, DemandModel.from_dict(doc["demand"]), int(doc["max_steps"])
    except KeyError as exc:
        raise ParameterError(f"scenario is missing {exc}") from None

