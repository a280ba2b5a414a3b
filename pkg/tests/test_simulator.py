import json
import math
from collections import defaultdict

import pytest
from conftest import INVERSE_SUB_DOLLAR_POSITIONS, INVERSE_THRESHOLD

from freeladder import Ledger, Money, ParameterError, Status, cumulative_revenue_exact
from freeladder.pricing import PriceSchedule, free_threshold, price_level_counts
from freeladder.simulator import (CSV_HEADER, GENERATOR, DemandModel, load_scenario, run,
                                  summarize, trajectory_csv)

TINY = dict(gamma=1.51, alpha=0.01, beta=1 / 200)


def test_wtp_below_start_never_buys():
    rows = run(TINY, DemandModel(10, ("point", 1.49)), 20)
    assert len(rows) == 20
    assert all(r.purchases_this_step == 0 and r.sold_total == 0 for r in rows)
    assert all(r.current_price == Money(150) and r.status is Status.PRICED for r in rows)


def test_wtp_above_gamma_always_buys():
    threshold = free_threshold(PriceSchedule(**TINY))
    rows = run(TINY, DemandModel(7, ("point", 2.0)), 10_000)
    for r in rows[:-1]:
        assert r.sold_total == 7 * r.step
    assert rows[-1].sold_total == threshold
    assert rows[-1].status is Status.FREE
    assert len(rows) == math.ceil(threshold / 7)


def test_uniform_acceptance_matches_cdf():
    events = defaultdict(lambda: [0, 0])

    def observe(price, wtp, bought):
        seen = events[price]
        seen[0] += 1
        seen[1] += bought

    run(dict(gamma=1.51, alpha=0.01, beta=1 / 5000), DemandModel(100, ("uniform", 0.0, 3.0), seed=7),
        5000, on_arrival=observe)
    checked = 0
    for price, (n, k) in sorted(events.items()):
        if n < 100:
            continue
        # WTP ~ U(0, 3 dollars): P(WTP >= price) = 1 - price/300 cents
        p = 1 - price / 300
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(k - n * p) <= 3 * sigma + 1, (price, n, k, p)
        checked += 1
    assert checked >= 50
    top = events[150]
    assert top[1] / top[0] == pytest.approx(0.5, abs=0.1)
    low = events[1]
    assert low[1] / low[0] > 0.98


def test_deterministic():
    demand = DemandModel(20.0, ("exponential", 1.0), seed=42)
    a = trajectory_csv(run(TINY, demand, 50), seed=42)
    b = trajectory_csv(run(TINY, demand, 50), seed=42)
    assert a == b
    c = trajectory_csv(run(TINY, DemandModel(20.0, ("exponential", 1.0), seed=43), 50), seed=43)
    assert a.splitlines()[2:] != c.splitlines()[2:]


def test_csv_layout():
    text = trajectory_csv(run(TINY, DemandModel(3, ("point", 2.0)), 2), seed=0)
    lines = text.splitlines()
    assert lines[0] == f"# generator={GENERATOR} seed=0"
    assert lines[1].split(",") == CSV_HEADER
    # prices 150, 150, 149 -> artist 106 + 106 + 105, next buyer pays 148
    assert lines[2] == "1,3,3,3,148,449,317,66,PRICED"


def test_rows_track_ledger():
    ledger = Ledger()
    rows = run(TINY, DemandModel(5, ("uniform", 0.2, 2.0), seed=3), 200, ledger=ledger)
    t = ledger.ledger_totals(ledger.purchases()[0].good_id)
    last = rows[-1]
    assert (last.gross_total, last.artist_total, last.foundation_pool, last.sold_total) == \
        (t.gross, t.artist, t.foundation, t.purchases)
    for a, b in zip(rows, rows[1:]):
        assert b.sold_total >= a.sold_total and b.gross_total >= a.gross_total
        assert b.current_price <= a.current_price


def test_summary_single_row():
    rows = run(TINY, DemandModel(4, ("point", 2.0)), 1)
    s = summarize(rows)
    r = rows[0]
    assert (s.gross, s.artist_total, s.sold, s.time_to_free) == \
        (r.gross_total, r.artist_total, r.sold_total, None)
    assert s.mean_price_paid == pytest.approx((150 + 150 + 149 + 148) / 400)


def test_summary_full_run_matches_pricing():
    s = PriceSchedule(**TINY)
    summary = summarize(run(TINY, DemandModel(10, ("point", 5.0)), 10_000))
    assert summary.gross == cumulative_revenue_exact(s, free_threshold(s))
    assert summary.time_to_free == math.ceil(free_threshold(s) / 10)


def test_summary_empty():
    with pytest.raises(ParameterError):
        summarize([])


def test_majority_of_buyers_pay_under_a_dollar():
    s = PriceSchedule(1.51, 0.01, 1 / 860_000)
    t = free_threshold(s)
    under = sum(v for c, v in price_level_counts(s, t).items() if c < 100)
    assert (t, under) == (INVERSE_THRESHOLD, INVERSE_SUB_DOLLAR_POSITIONS)
    assert under / t > 0.5


@pytest.mark.parametrize("kwargs", [
    dict(arrivals_per_step=-1, wtp=("point", 1.0)),
    dict(arrivals_per_step=1, wtp=("uniform", 2.0, 1.0)),
    dict(arrivals_per_step=1, wtp=("exponential", 0.0)),
    dict(arrivals_per_step=1, wtp=("lognormal", 1.0)),
    dict(arrivals_per_step=1, wtp=("point",)),
    dict(arrivals_per_step=1, wtp=("point", 1.0), seed=-5),
])
def test_invalid_demand(kwargs):
    with pytest.raises(ParameterError):
        DemandModel(**kwargs)


def test_load_scenario(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({
        "good": {"title": "S", "starting_price_cents": 150, "target_artist_payout_cents": 70_000},
        "demand": {"arrivals_per_step": 50, "wtp": {"kind": "uniform", "lo": 0, "hi": 3},
                   "seed": 9},
        "max_steps": 100,
    }))
    good, demand, steps = load_scenario(path)
    assert good["starting_price"] == Money(150)
    assert demand == DemandModel(50, ("uniform", 0.0, 3.0), 9)
    assert steps == 100
    rows = run(good, demand, steps)
    assert rows[0].current_price <= Money(150)
