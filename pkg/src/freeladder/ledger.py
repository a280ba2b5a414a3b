"""Catalog, purchase log and split accounting.

Every state change is one JSON object per line in an append-only log::

    {"kind": "good", "seq": 1, "good_id": "g1", "title": ..., "artist_id": ...,
     "gamma": 1.51, "alpha": 0.01, "beta": 5e-06}
    {"kind": "purchase", "seq": 2, "good_id": "g1", "buyer_id": "ann",
     "position": 0, "charged_cents": 150,
     "split_cents": {"artist": 106, "distributor": 22, "foundation": 22}}
    {"kind": "gift", "seq": 3, "good_id": "g1", "from": "ann", "to": "bob"}
    {"kind": "allocation", "seq": 4, "artist_id": "a1", "eligible": true,
     "pool_cents": ..., "originating_artist_grant_cents": ..., ...}

Money is always integer cents. A change is applied in memory only after its
line has been written and flushed, so replaying the file reproduces every
acknowledged purchase.
"""
from __future__ import annotations

import enum
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import pricing
from .errors import (ConflictError, CorruptLedgerError, LadderError, NotFoundError,
                     OwnershipError, ParameterError, PersistenceError)
from .foundation import Foundation, GrantAllocation, GrantPlan
from .money import ZERO, Money, as_fraction
from .pricing import PriceSchedule

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.01
TARGET_REL_TOL = 1e-3


class Status(str, enum.Enum):
    PRICED = "PRICED"
    FREE = "FREE"


@dataclass(frozen=True)
class SplitPolicy:
    artist_fraction: Fraction = Fraction(70, 100)
    distributor_fraction: Fraction = Fraction(15, 100)
    foundation_fraction: Fraction = Fraction(15, 100)

    def __post_init__(self):
        for name in ("artist_fraction", "distributor_fraction", "foundation_fraction"):
            f = as_fraction(getattr(self, name))
            if f < 0:
                raise ParameterError(f"{name} must be >= 0, got {f}")
            object.__setattr__(self, name, f)
        total = self.artist_fraction + self.distributor_fraction + self.foundation_fraction
        if total != 1:
            raise ParameterError(f"split fractions must sum to exactly 1, got {total}")

    @classmethod
    def from_percent(cls, artist, distributor, foundation):
        return cls(as_fraction(artist) / 100, as_fraction(distributor) / 100,
                   as_fraction(foundation) / 100)


@dataclass(frozen=True)
class Split:
    artist: Money = ZERO
    distributor: Money = ZERO
    foundation: Money = ZERO

    @property
    def total(self) -> Money:
        return self.artist + self.distributor + self.foundation

    def as_dict(self):
        return {"artist": self.artist.cents, "distributor": self.distributor.cents,
                "foundation": self.foundation.cents}


def split_payment(policy: SplitPolicy, amount: Money) -> Split:
    """Split ``amount`` exactly: floor each share, then hand leftover cents
    one at a time to artist, distributor, foundation in that order."""
    fractions = (policy.artist_fraction, policy.distributor_fraction,
                 policy.foundation_fraction)
    shares = [amount.cents * f.numerator // f.denominator for f in fractions]
    leftover = amount.cents - sum(shares)
    i = 0
    while leftover:
        shares[i % 3] += 1
        leftover -= 1
        i += 1
    return Split(*(Money(c) for c in shares))


@dataclass
class Good:
    id: str
    title: str
    artist_id: str
    schedule: PriceSchedule
    sold: int = 0
    status: Status = Status.PRICED
    free_threshold: int = field(default=0, repr=False)

    def __post_init__(self):
        self.free_threshold = pricing.free_threshold(self.schedule)
        if self.sold >= self.free_threshold:
            self.status = Status.FREE

    def as_dict(self):
        return {"good_id": self.id, "title": self.title, "artist_id": self.artist_id,
                **self.schedule.as_dict(), "sold": self.sold, "status": self.status.value,
                "free_threshold": self.free_threshold}


@dataclass(frozen=True)
class PurchaseRecord:
    good_id: str
    buyer_id: str
    position: int
    charged: Money
    split: Split
    seq: int

    def as_dict(self):
        return {"kind": "purchase", "seq": self.seq, "good_id": self.good_id,
                "buyer_id": self.buyer_id, "position": self.position,
                "charged_cents": self.charged.cents, "split_cents": self.split.as_dict()}


@dataclass(frozen=True)
class GiftRecord:
    good_id: str
    from_buyer: str
    to_recipient: str
    seq: int

    def as_dict(self):
        return {"kind": "gift", "seq": self.seq, "good_id": self.good_id,
                "from": self.from_buyer, "to": self.to_recipient}


@dataclass(frozen=True)
class Quote:
    good_id: str
    status: Status
    next_position: int
    current_price: Money
    free_threshold: int
    remaining_to_free: int

    def as_dict(self):
        return {"good_id": self.good_id, "status": self.status.value,
                "next_position": self.next_position,
                "current_price_cents": self.current_price.cents,
                "free_threshold": self.free_threshold,
                "remaining_to_free": self.remaining_to_free}


@dataclass(frozen=True)
class Totals:
    gross: Money = ZERO
    artist: Money = ZERO
    distributor: Money = ZERO
    foundation: Money = ZERO
    purchases: int = 0
    gifts: int = 0

    def add_purchase(self, rec: PurchaseRecord) -> Totals:
        return Totals(self.gross + rec.charged, self.artist + rec.split.artist,
                      self.distributor + rec.split.distributor,
                      self.foundation + rec.split.foundation,
                      self.purchases + 1, self.gifts)

    def add_gift(self) -> Totals:
        return Totals(self.gross, self.artist, self.distributor, self.foundation,
                      self.purchases, self.gifts + 1)

    def as_dict(self):
        return {"gross_cents": self.gross.cents, "artist_cents": self.artist.cents,
                "distributor_cents": self.distributor.cents,
                "foundation_cents": self.foundation.cents,
                "purchases": self.purchases, "gifts": self.gifts}


def projected_totals(schedule: PriceSchedule, policy: SplitPolicy,
                     n: int | None = None) -> Totals:
    """Totals the ledger would show after ``n`` purchases (default: the whole
    paid ladder), computed per price level instead of per purchase."""
    if n is None:
        n = pricing.free_threshold(schedule)
    gross = artist = distributor = foundation = 0
    for cents, count in pricing.price_level_counts(schedule, n).items():
        sp = split_payment(policy, Money(cents))
        gross += cents * count
        artist += sp.artist.cents * count
        distributor += sp.distributor.cents * count
        foundation += sp.foundation.cents * count
    return Totals(Money(gross), Money(artist), Money(distributor), Money(foundation), n, 0)


class _LogWriter:
    """Single appender for the ledger file. Each line is flushed (and by
    default fsynced) before the caller is told it succeeded."""

    def __init__(self, path: Path, fsync: bool = True):
        self.path = path
        self.fsync = fsync
        self._fh = open(path, "a", encoding="utf-8")

    def append(self, doc: dict):
        line = json.dumps(doc, separators=(",", ":"), sort_keys=True) + "\n"
        offset = self._fh.tell()
        try:
            self._fh.write(line)
            self._fh.flush()
            if self.fsync:
                os.fsync(self._fh.fileno())
        except OSError as exc:
            try:
                self._fh.truncate(offset)
            except OSError:
                log.exception("could not roll back partial ledger line")
            raise PersistenceError(f"could not append to {self.path}: {exc}") from exc

    def close(self):
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()


class Ledger:
    """In-memory catalog backed, optionally, by an append-only log file.

    Purchases of one good are serialized by a per-good lock, which defines
    the position order. Quotes read without locking and may be momentarily
    stale; the purchase result is authoritative.
    """

    def __init__(self, path=None, policy: SplitPolicy | None = None,
                 plan: GrantPlan | None = None, fsync: bool = True):
        self.policy = policy or SplitPolicy()
        self.foundation = Foundation(plan)
        self.goods: dict[str, Good] = {}
        self.records: list[PurchaseRecord | GiftRecord] = []
        self._totals: dict[str, Totals] = {}
        self._owners: set[tuple[str, str]] = set()
        self._good_locks: dict[str, threading.Lock] = {}
        self._append_lock = threading.Lock()
        self._seq = 0
        self.path = Path(path) if path is not None else None
        self._writer = None
        if self.path is not None:
            if self.path.exists():
                self._replay(self.path)
            self._writer = _LogWriter(self.path, fsync=fsync)

    @classmethod
    def open(cls, path, **kwargs) -> Ledger:
        return cls(path, **kwargs)

    @classmethod
    def read(cls, path, **kwargs) -> Ledger:
        """Replay ``path`` into a ledger that will not write back to it."""
        ledger = cls(None, **kwargs)
        ledger._replay(Path(path))
        return ledger

    def close(self):
        if self._writer is not None:
            self._writer.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- persistence -------------------------------------------------------

    def _commit(self, doc: dict) -> int:
        """Assign the next sequence number and persist ``doc``. Caller holds _append_lock."""
        seq = self._seq + 1
        doc = {**doc, "seq": seq}
        if self._writer is not None:
            self._writer.append(doc)
        self._seq = seq
        return seq

    def _replay(self, path: Path):
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                    self._apply_doc(doc)
                except CorruptLedgerError:
                    raise
                except (ValueError, KeyError, TypeError, LadderError) as exc:
                    raise CorruptLedgerError(line_no, f"{type(exc).__name__}: {exc}") from exc

    def _apply_doc(self, doc: dict):
        seq = doc["seq"]
        if not isinstance(seq, int) or seq <= self._seq:
            raise ValueError(f"sequence number {seq!r} does not increase")
        kind = doc["kind"]
        if kind == "good":
            if doc["good_id"] in self.goods:
                raise ValueError(f"duplicate good {doc['good_id']!r}")
            schedule = PriceSchedule(doc["gamma"], doc["alpha"], doc["beta"])
            self._add_good(Good(doc["good_id"], doc["title"], doc["artist_id"], schedule))
        elif kind == "purchase":
            good = self._get(doc["good_id"])
            charged = Money(doc["charged_cents"])
            split = Split(*(Money(doc["split_cents"][k])
                            for k in ("artist", "distributor", "foundation")))
            if doc["position"] != good.sold:
                raise ValueError(f"position {doc['position']} but {good.sold} already sold")
            if charged != pricing.unit_price(good.schedule, good.sold):
                raise ValueError(f"charged {charged.cents} is not the ladder price")
            if split.total != charged:
                raise ValueError("split does not sum to the charged amount")
            self._apply_purchase(good, PurchaseRecord(
                good.id, doc["buyer_id"], good.sold, charged, split, seq))
        elif kind == "gift":
            good = self._get(doc["good_id"])
            if (good.id, doc["from"]) not in self._owners:
                raise ValueError(f"{doc['from']!r} gifted a good they do not own")
            self._apply_gift(GiftRecord(good.id, doc["from"], doc["to"], seq))
        elif kind == "allocation":
            artist_id = doc["artist_id"]
            alloc = GrantAllocation.from_dict(doc)
            expected = self.foundation.plan_allocation(artist_id, doc["eligible"])
            if alloc.pool != expected.pool:
                raise ValueError(f"allocation pool {alloc.pool.cents} does not match "
                                 f"replayed pool {expected.pool.cents}")
            self.foundation.apply(artist_id, alloc)
        else:
            raise ValueError(f"unknown record kind {kind!r}")
        self._seq = seq

    # -- state helpers -------------------------------------------------------

    def _get(self, good_id) -> Good:
        try:
            return self.goods[good_id]
        except KeyError:
            raise NotFoundError(f"unknown good {good_id!r}") from None

    def _add_good(self, good: Good):
        self.goods[good.id] = good
        self._totals[good.id] = Totals()
        self._good_locks[good.id] = threading.Lock()

    def _apply_purchase(self, good: Good, rec: PurchaseRecord):
        good.sold += 1
        if good.sold >= good.free_threshold:
            good.status = Status.FREE
        self._totals[good.id] = self._totals[good.id].add_purchase(rec)
        self._owners.add((good.id, rec.buyer_id))
        self.foundation.accrue(good.artist_id, rec.split.foundation)
        self.records.append(rec)

    def _apply_gift(self, rec: GiftRecord):
        self._totals[rec.good_id] = self._totals[rec.good_id].add_gift()
        self._owners.add((rec.good_id, rec.to_recipient))
        self.records.append(rec)

    # -- operations --------------------------------------------------------

    def create_good(self, title: str, artist_id: str, *, gamma=None, alpha=DEFAULT_ALPHA,
                    beta=None, starting_price: Money | None = None,
                    target_artist_payout: Money | None = None,
                    good_id: str | None = None) -> Good:
        """Add a good priced either by explicit ``gamma``/``beta`` or by a
        starting price plus the payout the artist wants to receive."""
        explicit = gamma is not None or beta is not None
        target = starting_price is not None or target_artist_payout is not None
        if explicit == target:
            raise ParameterError(
                "give either gamma and beta, or starting_price and target_artist_payout")
        if explicit:
            if gamma is None or beta is None:
                raise ParameterError("explicit pricing needs both gamma and beta")
            schedule = PriceSchedule(float(gamma), float(alpha), float(beta))
        else:
            if starting_price is None or target_artist_payout is None:
                raise ParameterError(
                    "target pricing needs both starting_price and target_artist_payout")
            if target_artist_payout.cents <= 0:
                raise ParameterError("target artist payout must be positive")
            gamma = starting_price.cents / 100 + float(alpha)
            gross = pricing.artist_gross_from_payout(target_artist_payout,
                                                     self.policy.artist_fraction)
            beta = pricing.calibrate_beta_exact(gamma, float(alpha), gross,
                                                rel_tol=TARGET_REL_TOL)
            schedule = PriceSchedule(gamma, float(alpha), beta)
        if not str(title).strip() or not str(artist_id).strip():
            raise ParameterError("title and artist_id must be non-empty")

        with self._append_lock:
            gid = good_id if good_id is not None else f"g{len(self.goods) + 1}"
            if gid in self.goods:
                raise ConflictError(f"good {gid!r} already exists")
            good = Good(gid, str(title), str(artist_id), schedule)
            self._commit({"kind": "good", "good_id": gid, "title": good.title,
                          "artist_id": good.artist_id, **schedule.as_dict()})
            self._add_good(good)
        return good

    def quote(self, good_id: str) -> Quote:
        good = self._get(good_id)
        n = good.sold
        price = pricing.unit_price(good.schedule, n)
        status = Status.FREE if n >= good.free_threshold else Status.PRICED
        return Quote(good.id, status, n, price, good.free_threshold,
                     max(0, good.free_threshold - n))

    def purchase(self, good_id: str, buyer_id: str) -> PurchaseRecord:
        """Sell the next position of the ladder to ``buyer_id``.

        Purchases of a FREE good are recorded as zero-charge downloads.
        Duplicate calls are distinct purchases.
        """
        good = self._get(good_id)
        if not str(buyer_id).strip():
            raise ParameterError("buyer_id must be non-empty")
        with self._good_locks[good.id]:
            position = good.sold
            charged = pricing.unit_price(good.schedule, position)
            split = split_payment(self.policy, charged)
            with self.foundation.lock, self._append_lock:
                seq = self._commit({"kind": "purchase", "good_id": good.id,
                                    "buyer_id": str(buyer_id), "position": position,
                                    "charged_cents": charged.cents,
                                    "split_cents": split.as_dict()})
                rec = PurchaseRecord(good.id, str(buyer_id), position, charged, split, seq)
                self._apply_purchase(good, rec)
        return rec

    def owns(self, good_id: str, holder: str) -> bool:
        return (good_id, holder) in self._owners

    def gift(self, good_id: str, from_buyer: str, to_recipient: str) -> GiftRecord:
        """Pass a copy to someone else. Gifts never advance the ladder."""
        good = self._get(good_id)
        if not str(to_recipient).strip():
            raise ParameterError("recipient must be non-empty")
        with self._good_locks[good.id]:
            if not self.owns(good.id, from_buyer):
                raise OwnershipError(f"{from_buyer!r} does not own good {good.id!r}")
            with self._append_lock:
                seq = self._commit({"kind": "gift", "good_id": good.id,
                                    "from": from_buyer, "to": str(to_recipient)})
                rec = GiftRecord(good.id, from_buyer, str(to_recipient), seq)
                self._apply_gift(rec)
        return rec

    def ledger_totals(self, good_id: str) -> Totals:
        self._get(good_id)
        return self._totals[good_id]

    def purchases(self, good_id: str | None = None) -> list[PurchaseRecord]:
        return [r for r in self.records if isinstance(r, PurchaseRecord)
                and (good_id is None or r.good_id == good_id)]

    def gifts(self, good_id: str | None = None) -> list[GiftRecord]:
        return [r for r in self.records if isinstance(r, GiftRecord)
                and (good_id is None or r.good_id == good_id)]

    def allocate_grants(self, artist_id: str, eligible: bool = True) -> GrantAllocation:
        """Turn one artist's foundation pool into grants and log the result."""
        with self.foundation.lock:
            alloc = self.foundation.plan_allocation(artist_id, eligible)
            with self._append_lock:
                self._commit({"kind": "allocation", "artist_id": artist_id,
                              "eligible": bool(eligible), **alloc.as_dict()})
                self.foundation.apply(artist_id, alloc)
        return alloc

    def snapshot(self) -> dict:
        """Comparable view of the whole state; used to check replay determinism."""
        return {
            "goods": {gid: g.as_dict() for gid, g in sorted(self.goods.items())},
            "totals": {gid: t.as_dict() for gid, t in sorted(self._totals.items())},
            "foundation": self.foundation.report(),
            "seq": self._seq,
        }
