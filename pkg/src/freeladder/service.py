"""HTTP storefront over a :class:`~freeladder.ledger.Ledger`.

Endpoints (JSON bodies, money always in integer cents)::

    GET  /goods                          list the catalog
    POST /goods                          create a good (explicit or target pricing)
    GET  /goods/{id}/quote               where the ladder stands for the next buyer
    POST /goods/{id}/purchases           {"buyer_id"} -> purchase record with split
    POST /goods/{id}/gifts               {"from", "to"} -> gift record
    GET  /goods/{id}/totals              ledger totals for one good
    GET  /foundation                     foundation report
    POST /foundation/allocations         {"artist_id", "eligible"} -> allocation

Errors come back as ``{"error": {"code": ..., "message": ...}}`` with code in
NOT_FOUND, INVALID, CONFLICT, INTERNAL. There are no client idempotency keys:
posting the same purchase twice buys twice.
"""
from __future__ import annotations

import json
import logging
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import (CalibrationError, ConflictError, LadderError, NotFoundError,
                     OwnershipError, ParameterError, PersistenceError)
from .foundation import GrantPlan
from .ledger import DEFAULT_ALPHA, Ledger, SplitPolicy
from .money import Money

log = logging.getLogger(__name__)

ERROR_CODES = ("NOT_FOUND", "INVALID", "CONFLICT", "INTERNAL")
_STATUS = {"NOT_FOUND": 404, "INVALID": 400, "CONFLICT": 409, "INTERNAL": 500}


@dataclass(frozen=True)
class ApiError:
    code: str
    message: str

    def __post_init__(self):
        if self.code not in ERROR_CODES:
            raise ValueError(f"unknown error code {self.code!r}")
        if not self.message:
            object.__setattr__(self, "message", self.code.lower().replace("_", " "))

    @classmethod
    def from_exception(cls, exc: Exception) -> ApiError:
        if isinstance(exc, NotFoundError):
            code = "NOT_FOUND"
        elif isinstance(exc, (ParameterError, CalibrationError)):
            code = "INVALID"
        elif isinstance(exc, (ConflictError, OwnershipError)):
            code = "CONFLICT"
        else:
            code = "INTERNAL"
        return cls(code, str(exc))

    def response(self) -> JSONResponse:
        return JSONResponse(status_code=_STATUS[self.code],
                            content={"error": {"code": self.code, "message": self.message}})


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    ledger_path: str = "ledger.jsonl"
    split_percent: tuple = (70, 15, 15)
    established_grant_cents: int = 5_000_000
    newcomer_grant_cents: int = 1_000_000
    fsync: bool = True

    @classmethod
    def load(cls, path=None, **overrides) -> ServiceConfig:
        """Read a JSON config file (if given) and apply non-None overrides."""
        values = {}
        if path is not None:
            values = json.loads(Path(path).read_text(encoding="utf-8"))
            known = set(cls.__dataclass_fields__)
            unknown = set(values) - known
            if unknown:
                raise ParameterError(f"unknown config keys {sorted(unknown)}")
        values.update({k: v for k, v in overrides.items() if v is not None})
        if "split_percent" in values:
            values["split_percent"] = tuple(values["split_percent"])
        return cls(**values)

    @property
    def policy(self) -> SplitPolicy:
        return SplitPolicy.from_percent(*self.split_percent)

    @property
    def plan(self) -> GrantPlan:
        return GrantPlan(Money(self.established_grant_cents), Money(self.newcomer_grant_cents))

    def open_ledger(self) -> Ledger:
        return Ledger(self.ledger_path, policy=self.policy, plan=self.plan, fsync=self.fsync)


class CreateGood(BaseModel):
    title: str
    artist_id: str
    good_id: Optional[str] = None
    alpha: float = DEFAULT_ALPHA
    gamma: Optional[float] = None
    beta: Optional[float] = None
    starting_price_cents: Optional[int] = Field(default=None, ge=0)
    target_artist_payout_cents: Optional[int] = Field(default=None, ge=0)


class PurchaseBody(BaseModel):
    buyer_id: str


class GiftBody(BaseModel):
    model_config = {"populate_by_name": True}
    from_buyer: str = Field(alias="from")
    to_recipient: str = Field(alias="to")


class AllocationBody(BaseModel):
    artist_id: str
    eligible: bool = True


def _record_doc(rec) -> dict:
    doc = rec.as_dict()
    doc.pop("kind", None)
    return doc


def create_app(ledger: Ledger) -> FastAPI:
    """Build the API around an already-open ledger. The app closes it on shutdown."""

    @asynccontextmanager
    async def lifespan(app):
        yield
        ledger.close()

    app = FastAPI(title="freeladder storefront", lifespan=lifespan)
    app.state.ledger = ledger

    @app.exception_handler(LadderError)
    async def ladder_error(request: Request, exc: LadderError):
        if isinstance(exc, PersistenceError):
            log.error("persistence failure: %s", exc)
        return ApiError.from_exception(exc).response()

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        parts = ["{}: {}".format(".".join(str(p) for p in e["loc"]), e["msg"])
                 for e in exc.errors()]
        return ApiError("INVALID", "; ".join(parts)).response()

    # Handlers are plain functions so FastAPI runs them on its thread pool;
    # the ledger's locks do the serialization.

    @app.get("/goods")
    def list_goods():
        return {"goods": [g.as_dict() for g in ledger.goods.values()]}

    @app.post("/goods", status_code=201)
    def create_good(body: CreateGood):
        kwargs = {"good_id": body.good_id, "alpha": body.alpha}
        if body.starting_price_cents is not None or body.target_artist_payout_cents is not None:
            if body.starting_price_cents is None or body.target_artist_payout_cents is None:
                raise ParameterError(
                    "target pricing needs starting_price_cents and target_artist_payout_cents")
            kwargs["starting_price"] = Money(body.starting_price_cents)
            kwargs["target_artist_payout"] = Money(body.target_artist_payout_cents)
        if body.gamma is not None or body.beta is not None:
            kwargs["gamma"], kwargs["beta"] = body.gamma, body.beta
        good = ledger.create_good(body.title, body.artist_id, **kwargs)
        return good.as_dict()

    @app.get("/goods/{good_id}/quote")
    def quote(good_id: str):
        return ledger.quote(good_id).as_dict()

    @app.post("/goods/{good_id}/purchases", status_code=201)
    def purchase(good_id: str, body: PurchaseBody):
        return _record_doc(ledger.purchase(good_id, body.buyer_id))

    @app.post("/goods/{good_id}/gifts", status_code=201)
    def gift(good_id: str, body: GiftBody):
        return _record_doc(ledger.gift(good_id, body.from_buyer, body.to_recipient))

    @app.get("/goods/{good_id}/totals")
    def totals(good_id: str):
        return {"good_id": good_id, **ledger.ledger_totals(good_id).as_dict()}

    @app.get("/foundation")
    def foundation_report():
        return ledger.foundation.report()

    @app.post("/foundation/allocations", status_code=201)
    def allocate(body: AllocationBody):
        alloc = ledger.allocate_grants(body.artist_id, body.eligible)
        return {"artist_id": body.artist_id, "eligible": body.eligible, **alloc.breakdown()}

    return app


def serve(config: ServiceConfig):
    """Replay the ledger and serve until interrupted.

    A corrupt ledger raises :class:`~freeladder.errors.CorruptLedgerError`
    before anything binds.
    """
    import uvicorn

    ledger = config.open_ledger()
    app = create_app(ledger)
    log.info("serving %d goods from %s on %s:%d", len(ledger.goods), config.ledger_path,
             config.host, config.port)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    finally:
        ledger.close()

