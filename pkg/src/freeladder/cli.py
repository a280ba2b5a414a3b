"""Command line entry point: ``freeladder <command> ...``.

Exit codes: 0 success, 2 bad parameters, 3 calibration failure,
4 ledger file problems, 1 anything else raised by the library.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from contextlib import contextmanager
from fractions import Fraction

from . import pricing, simulator
from .errors import (CalibrationError, CorruptLedgerError, LadderError, ParameterError,
                     PersistenceError)
from .ledger import Ledger, SplitPolicy, projected_totals
from .money import Money
from .pricing import PriceSchedule

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARAMETER = 2
EXIT_CALIBRATION = 3
EXIT_LEDGER = 4


def money_arg(text: str) -> Money:
    try:
        return Money.parse(text)
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def rate_arg(text: str) -> Fraction:
    """``0.13``, ``13%`` or ``13/100``."""
    t = text.strip()
    try:
        if t.endswith("%"):
            return Fraction(t[:-1]) / 100
        return Fraction(t)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rate: {text!r}") from None


def positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def beta_arg(text: str) -> float:
    """A decay rate, also accepted as ``1/200000``."""
    if "/" in text:
        try:
            return float(Fraction(text.strip()))
        except (ValueError, ZeroDivisionError):
            raise argparse.ArgumentTypeError(f"not a rate: {text!r}") from None
    return positive_float(text)


def non_negative_int(text: str) -> int:
    try:
        v = int(text.replace("_", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _kv(out, pairs):
    width = max(len(k) for k, _ in pairs)
    for k, v in pairs:
        out.write(f"{k:<{width}}  {v}\n")


def _inverse(beta: float) -> str:
    return f"1/{1 / beta:,.0f}" if beta < 1 else f"{beta:.6g}"


# -- commands ----------------------------------------------------------------

def cmd_calibrate(args) -> int:
    policy = SplitPolicy(artist_fraction=args.artist_fraction,
                         distributor_fraction=(1 - args.artist_fraction) / 2,
                         foundation_fraction=(1 - args.artist_fraction) / 2)
    gamma = args.start_price.cents / 100 + args.alpha
    if args.target_payout is not None:
        gross = pricing.artist_gross_from_payout(args.target_payout, policy.artist_fraction)
    else:
        gross = args.target_gross

    simplified = pricing.calibrate_beta_approx(gamma, args.alpha, gross, pricing.PAPER_SIMPLIFIED)
    pairs = [("gamma", f"{gamma:.6g}"), ("alpha", f"{args.alpha:.6g}"),
             ("target_gross_cents", gross.cents),
             ("beta_paper_simplified", f"{simplified!r} ({_inverse(simplified)})")]
    try:
        full = pricing.calibrate_beta_approx(gamma, args.alpha, gross, pricing.FULL_INTEGRAL)
        pairs.append(("beta_full_integral", f"{full!r} ({_inverse(full)})"))
    except ParameterError as exc:
        full = None
        pairs.append(("beta_full_integral", f"n/a ({exc})"))
    chosen = simplified if args.mode == pricing.PAPER_SIMPLIFIED else full
    if chosen is not None:
        pairs.append(("buyers_to_free_approx",
                      f"{pricing.buyers_to_free_approx(PriceSchedule(gamma, args.alpha, chosen)):,.0f}"))

    status = EXIT_OK
    try:
        exact = pricing.calibrate_beta_exact(gamma, args.alpha, gross, rel_tol=args.rel_tol)
    except CalibrationError as exc:
        pairs.append(("beta_exact", "n/a"))
        print(f"error: exact calibration failed: {exc}", file=sys.stderr)
        status = EXIT_CALIBRATION
    else:
        s = PriceSchedule(gamma, args.alpha, exact)
        t = projected_totals(s, policy)
        pairs += [("beta_exact", f"{exact!r} ({_inverse(exact)})"),
                  ("free_threshold", pricing.free_threshold(s)),
                  ("projected_gross_cents", t.gross.cents),
                  ("projected_artist_cents", t.artist.cents),
                  ("projected_gross", str(t.gross)),
                  ("projected_artist", str(t.artist))]
    _kv(sys.stdout, pairs)
    return status


SCHEDULE_HEADER = ["n", "price_cents", "cumulative_exact_cents", "cumulative_geometric",
                   "free_threshold"]


def cmd_schedule(args) -> int:
    s = PriceSchedule(args.gamma, args.alpha, args.beta)
    threshold = pricing.free_threshold(s)
    with _output(args.out) as out:
        if args.csv:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(SCHEDULE_HEADER)
            emit = w.writerow
        else:
            fmt = "{:>12} {:>11} {:>22} {:>20} {:>14}\n"
            out.write(fmt.format(*SCHEDULE_HEADER))
            emit = lambda row: out.write(fmt.format(*row))  # noqa: E731
        running = 0
        for n in range(args.until):
            price = pricing.unit_price(s, n).cents
            running += price
            if n % args.every and n != threshold:
                continue
            geometric = pricing.cumulative_revenue_geometric(s, n + 1) * 100
            emit([n, price, running, f"{geometric:.2f}", 1 if n == threshold else 0])
    return EXIT_OK


def cmd_simulate(args) -> int:
    good, demand, max_steps = simulator.load_scenario(args.config)
    rows = simulator.run(good, demand, max_steps)
    summary = simulator.summarize(rows) if rows else None
    with _output(args.out) as out:
        simulator.write_csv(rows, out, seed=demand.seed)
        if summary is not None and args.summary is None:
            for k, v in summary.as_dict().items():
                out.write(f"# {k}={v}\n")
    if summary is not None and args.summary is not None:
        with open(args.summary, "w", encoding="utf-8") as fh:
            json.dump(summary.as_dict(), fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import ServiceConfig, serve

    config = ServiceConfig.load(args.config, host=args.host, port=args.port,
                                ledger_path=args.ledger,
                                fsync=False if args.no_fsync else None)
    serve(config)
    return EXIT_OK


def cmd_report(args) -> int:
    from .service import ServiceConfig

    config = ServiceConfig.load(args.config, ledger_path=args.ledger)
    ledger = Ledger.read(config.ledger_path, policy=config.policy, plan=config.plan)
    doc = {
        "goods": [{**g.as_dict(), "totals": ledger.ledger_totals(g.id).as_dict()}
                  for g in ledger.goods.values()],
        "foundation": ledger.foundation.report(),
    }
    with _output(args.out) as out:
        json.dump(doc, out, indent=2)
        out.write("\n")
    return EXIT_OK


def cmd_compare_legacy(args) -> int:
    deal = pricing.LegacyDeal(args.retail, args.store_cut, args.dist_cut, args.artist_rate)
    legacy = pricing.legacy_artist_share(deal, args.units)
    policy = SplitPolicy(artist_fraction=args.artist_fraction,
                         distributor_fraction=(1 - args.artist_fraction) / 2,
                         foundation_fraction=(1 - args.artist_fraction) / 2)
    gamma = args.start_price.cents / 100 + args.alpha

    beta = args.beta
    if beta is None and legacy.cents > 0:
        gross = pricing.artist_gross_from_payout(legacy, policy.artist_fraction)
        if args.match == "gross":
            beta = pricing.calibrate_beta_exact(gamma, args.alpha, gross, rel_tol=args.rel_tol)
        else:
            # Leftover cents go to the artist, so at low prices the ledger pays
            # the artist a bit more than the nominal fraction of gross; match
            # the ledger's artist money directly.
            beta0 = pricing.calibrate_beta_approx(gamma, args.alpha, gross,
                                                  pricing.PAPER_SIMPLIFIED)
            beta = pricing.calibrate_beta_exact(
                gamma, args.alpha, legacy, rel_tol=args.rel_tol,
                bracket=(beta0 / 10, beta0 * 10),
                objective=lambda s: projected_totals(s, policy).artist.cents)

    pairs = [("", f"{'legacy':>18}  {'ladder':>18}")]
    if beta is None:
        ladder = None
    else:
        s = PriceSchedule(gamma, args.alpha, beta)
        ladder = projected_totals(s, policy)

    def row(name, left, right):
        pairs.append((name, f"{left:>18}  {right:>18}"))

    row("artist", str(legacy), str(ladder.artist) if ladder else "n/a")
    row("artist_cents", legacy.cents, ladder.artist.cents if ladder else "n/a")
    row("units_or_buyers", f"{args.units:,}", f"{ladder.purchases:,}" if ladder else "n/a")
    row("gross_cents", deal.retail.cents * args.units, ladder.gross.cents if ladder else "n/a")
    row("artist_per_unit_cents", legacy.cents // args.units if args.units else 0,
        f"{ladder.artist.cents / ladder.purchases:.2f}" if ladder and ladder.purchases else "n/a")
    if beta is not None:
        row("beta", "", _inverse(beta))
    _kv(sys.stdout, pairs)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_schedule_start(p):
    p.add_argument("--start-price", type=money_arg, default=Money(150),
                   help="price paid by the first buyer, dollars (default 1.50)")
    p.add_argument("--alpha", type=positive_float, default=0.01,
                   help="floor parameter in dollars (default 0.01)")
    p.add_argument("--artist-fraction", type=rate_arg, default=Fraction(7, 10),
                   help="artist share of each sale; the rest splits evenly (default 0.70)")
    p.add_argument("--rel-tol", type=positive_float, default=1e-3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freeladder",
                                     description="Decaying price ladder toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="find beta for a revenue or payout target")
    _add_schedule_start(p)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--target-payout", type=money_arg, help="artist payout, dollars")
    target.add_argument("--target-gross", type=money_arg, help="gross revenue, dollars")
    p.add_argument("--mode", choices=pricing.CALIBRATION_MODES, default=pricing.PAPER_SIMPLIFIED,
                   help="approximation used for buyers_to_free_approx")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("schedule", help="print the price ladder")
    p.add_argument("--gamma", type=positive_float, required=True)
    p.add_argument("--alpha", type=positive_float, default=0.01)
    p.add_argument("--beta", type=beta_arg, required=True)
    p.add_argument("--until", type=non_negative_int, required=True,
                   help="emit positions 0..N-1")
    p.add_argument("--every", type=non_negative_int, default=1,
                   help="emit every K-th row (the free threshold row is always kept)")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="run a demand scenario")
    p.add_argument("--config", required=True, help="JSON scenario file")
    p.add_argument("--out", help="trajectory CSV path (default stdout)")
    p.add_argument("--summary", help="write the summary as JSON here instead of "
                                     "as trailing # lines")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP storefront")
    p.add_argument("--config", help="JSON service config")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--ledger", help="ledger file path")
    p.add_argument("--no-fsync", action="store_true")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="totals and foundation report from a ledger file")
    p.add_argument("--ledger")
    p.add_argument("--config", help="JSON service config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare-legacy", help="legacy CD deal against a price ladder")
    p.add_argument("--retail", type=money_arg, default=Money(1500))
    p.add_argument("--store-cut", type=money_arg, default=Money(500))
    p.add_argument("--dist-cut", type=money_arg, default=Money(300))
    p.add_argument("--artist-rate", type=rate_arg, default=Fraction(13, 100))
    p.add_argument("--units", type=non_negative_int, default=1_000_000)
    _add_schedule_start(p)
    p.add_argument("--beta", type=beta_arg,
                   help="use this schedule instead of calibrating to the legacy payout")
    p.add_argument("--match", choices=("artist", "gross"), default="artist",
                   help="calibrate on ledger artist money (default) or on "
                        "gross = payout / artist fraction")
    p.set_defaults(func=cmd_compare_legacy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "every", 1) == 0:
        parser.error("--every must be at least 1")
    try:
        return args.func(args)
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except (CorruptLedgerError, PersistenceError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LEDGER
    except LadderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
