"""Foundation pool and grant allocation.

The foundation receives its share of every sale. At an explicit allocation
call the pool of one originating artist is turned into grants: that artist
is funded first (if eligible and the pool covers an established grant), the
rest funds as many newcomer grants as fit, and the residue carries over.
Who the newcomers are is not modeled; only the count is returned.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

from .errors import ParameterError
from .money import ZERO, Money


@dataclass(frozen=True)
class GrantPlan:
    established_grant: Money = Money.dollars(50_000)
    newcomer_grant: Money = Money.dollars(10_000)

    def __post_init__(self):
        if self.newcomer_grant.cents <= 0:
            raise ParameterError("newcomer grant must be positive")
        if self.established_grant < self.newcomer_grant:
            raise ParameterError("established grant must be at least the newcomer grant")


@dataclass(frozen=True)
class GrantAllocation:
    pool: Money
    originating_artist_grant: Money
    newcomer_grants: int
    newcomer_grant: Money
    carryover: Money

    @property
    def newcomer_total(self) -> Money:
        return self.newcomer_grant * self.newcomer_grants

    def as_dict(self):
        return {
            "pool_cents": self.pool.cents,
            "originating_artist_grant_cents": self.originating_artist_grant.cents,
            "newcomer_grants": self.newcomer_grants,
            "newcomer_grant_cents": self.newcomer_grant.cents,
            "carryover_cents": self.carryover.cents,
        }

    def breakdown(self):
        return {**self.as_dict(), "newcomer_total_cents": self.newcomer_total.cents}

    @classmethod
    def from_dict(cls, d):
        return cls(
            pool=Money(d["pool_cents"]),
            originating_artist_grant=Money(d["originating_artist_grant_cents"]),
            newcomer_grants=d["newcomer_grants"],
            newcomer_grant=Money(d["newcomer_grant_cents"]),
            carryover=Money(d["carryover_cents"]),
        )


def accrue(pool: Money, foundation_share: Money) -> Money:
    return pool + foundation_share


def allocate_grants(pool: Money, originating_artist_eligible: bool = True,
                    plan: GrantPlan = GrantPlan()) -> GrantAllocation:
    remainder = pool.cents
    first = 0
    if originating_artist_eligible and remainder >= plan.established_grant.cents:
        first = plan.established_grant.cents
        remainder -= first
    count, carry = divmod(remainder, plan.newcomer_grant.cents)
    return GrantAllocation(
        pool=pool,
        originating_artist_grant=Money(first),
        newcomer_grants=count,
        newcomer_grant=plan.newcomer_grant,
        carryover=Money(carry),
    )


class Foundation:
    """Per-artist pools fed by purchases, plus the allocation history.

    Accrual and allocation share one lock, so an allocation sees a pool that
    no purchase is concurrently adding to.
    """

    def __init__(self, plan: GrantPlan | None = None):
        self.plan = plan or GrantPlan()
        self.pools: dict[str, Money] = {}
        self.history: list[tuple[str, GrantAllocation]] = []
        self.lock = threading.RLock()

    def accrue(self, artist_id: str, share: Money) -> Money:
        with self.lock:
            pool = accrue(self.pools.get(artist_id, ZERO), share)
            self.pools[artist_id] = pool
            return pool

    def plan_allocation(self, artist_id: str, eligible: bool = True) -> GrantAllocation:
        """Compute, without applying, the allocation for one artist's pool."""
        with self.lock:
            return allocate_grants(self.pools.get(artist_id, ZERO), eligible, self.plan)

    def apply(self, artist_id: str, allocation: GrantAllocation):
        with self.lock:
            self.pools[artist_id] = allocation.carryover
            self.history.append((artist_id, allocation))

    @property
    def balance(self) -> Money:
        return Money(sum(p.cents for p in self.pools.values()))

    def report(self) -> dict:
        """Foundation report document; all money in integer cents."""
        with self.lock:
            return {
                "balance_cents": self.balance.cents,
                "pools_cents": {a: p.cents for a, p in sorted(self.pools.items())},
                "plan": {
                    "established_grant_cents": self.plan.established_grant.cents,
                    "newcomer_grant_cents": self.plan.newcomer_grant.cents,
                },
                "allocations": [
                    {"artist_id": a, **alloc.breakdown()} for a, alloc in self.history
                ],
            }
