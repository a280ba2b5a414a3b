"""Pricing, accounting and simulation for goods whose price falls with every
copy sold until they become free."""

from .errors import (CalibrationError, ConflictError, CorruptLedgerError, LadderError,
                     NotFoundError, OwnershipError, ParameterError, PersistenceError,
                     ResourceLimitError)
from .foundation import Foundation, GrantAllocation, GrantPlan, accrue, allocate_grants
from .ledger import (Good, GiftRecord, Ledger, PurchaseRecord, Quote, Split, SplitPolicy,
                     Status, Totals, projected_totals, split_payment)
from .money import Money
from .pricing import (LegacyDeal, PriceSchedule, artist_gross_from_payout,
                      buyers_to_free_approx, calibrate_beta_approx, calibrate_beta_exact,
                      cumulative_revenue_exact, cumulative_revenue_geometric,
                      earnings_integral_approx, free_threshold, legacy_artist_share,
                      total_revenue_exact, unit_price)

__version__ = "0.1.0"
