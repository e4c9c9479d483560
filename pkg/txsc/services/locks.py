"""
Lock-manager chain.

CDTF entry points may only run while the caller holds a lock covering the
attributes the entry and its callback touch. Locks live on their own chain:
operations take effect immediately, are charged one unit of gas each and
are appended to a lock-chain block when the simulator flushes at the end of
a tick with lock activity.
"""

from typing import Iterable, Optional

from ..core.exceptions import AlreadyReleased, UnknownLock
from ..core.logging import get_logger
from ..models.chain import Block, Chain, Ledger, LockItem, LockOp, LockRecord, LockStatus

logger = get_logger(__name__)

LOCK_OP_GAS = 1


class LockManager:
    """
    Registry of attribute locks backed by a lock chain.

    Attributes:
        chain: The lock chain; its blocks hold `LockOp` entries
        records: Every lock ever granted, keyed by lock id
    """

    def __init__(self, chain: Chain, ledger: Ledger, owners: Optional[dict[tuple[str, str], str]] = None):
        self.chain = chain
        self.ledger = ledger
        self.owners = owners if owners is not None else {}
        self.records: dict[str, LockRecord] = {}
        self._pending: list[LockOp] = []
        self._counter = 0

    def acquire_locks(
        self,
        client: str,
        items: Iterable[LockItem],
        tick: int,
        order: int = 0,
        span_id: Optional[str] = None,
    ) -> Optional[str]:
        """
        Grant a lock on `items` unless a Held lock overlaps them.

        Args:
            client: Requesting client, recorded as holder
            items: Non-empty (chain, contract, attribute) triples
            tick: Simulation tick of the request
            order: Global history order of the request
            span_id: Span the lock serves

        Returns:
            Optional[str]: The new lock id, or None when the request is denied
        """
        wanted = frozenset(items)
        if not wanted:
            raise ValueError("a lock request must name at least one item")
        for record in self.records.values():
            if record.status == LockStatus.HELD and record.overlaps(wanted):
                logger.debug(f"Lock denied to {client}: overlaps {record.lock_id}")
                return None
        self._counter += 1
        lock_id = f"{self.chain.chain_id}:{self._counter}"
        self.records[lock_id] = LockRecord(
            lock_id=lock_id,
            holder=client,
            items=wanted,
            status=LockStatus.HELD,
            acquired_tick=tick,
            acquired_order=order,
            span_id=span_id,
        )
        self._pending.append(LockOp("acquire", lock_id, client, tick, order))
        logger.info(f"Lock {lock_id} granted to {client} on {len(wanted)} items")
        return lock_id

    def release_lock(
        self,
        lock_id: str,
        mode: LockStatus,
        tick: int = 0,
        order: int = 0,
        payer: Optional[str] = None,
    ) -> None:
        """
        End a Held lock.

        A forfeited lock additionally pays its escrow to the owner of the
        contract whose attributes it covers.

        Raises:
            UnknownLock: No lock has this id
            AlreadyReleased: The lock is no longer Held
        """
        record = self.records.get(lock_id)
        if record is None:
            raise UnknownLock(str(lock_id))
        if record.status != LockStatus.HELD:
            raise AlreadyReleased(lock_id, record.status.value)
        if mode == LockStatus.HELD:
            raise ValueError("release mode must be Released or Forfeited")
        record.status = mode
        record.released_tick = tick
        record.released_order = order
        if mode == LockStatus.FORFEITED:
            owner = self.owner_of(record)
            amount = self.ledger.forfeit_escrow(lock_id, owner)
            logger.info(f"Lock {lock_id} forfeited: {amount} escrow to {owner}")
        else:
            logger.info(f"Lock {lock_id} released")
        op = "forfeit" if mode == LockStatus.FORFEITED else "release"
        self._pending.append(LockOp(op, lock_id, payer or record.holder, tick, order))

    def owner_of(self, record: LockRecord) -> str:
        chain_id, contract, _ = min(record.items)
        return self.owners.get((chain_id, contract), record.holder)

    def is_held(self, lock_id, holder: Optional[str] = None, items: Iterable[LockItem] = ()) -> bool:
        """Held by `holder` (when given) and covering every item in `items`."""
        record = self.records.get(lock_id) if isinstance(lock_id, str) else None
        if record is None or record.status != LockStatus.HELD:
            return False
        if holder is not None and record.holder != holder:
            return False
        return frozenset(items) <= record.items

    def is_active(self, lock_id) -> bool:
        return self.is_held(lock_id)

    def latest_lock(self, holder: str, chain_id: str, contract: str) -> Optional[str]:
        found = None
        for record in self.records.values():
            if record.holder == holder and any(
                item[0] == chain_id and item[1] == contract for item in record.items
            ):
                found = record.lock_id
        return found

    def pending_gas(self, client: str) -> int:
        """Gas owed by `client` for operations not yet flushed."""
        return LOCK_OP_GAS * sum(1 for op in self._pending if op.client_id == client)

    def flush(self, tick: int) -> Optional[Block]:
        """Append the pending operations as one lock-chain block and charge their gas."""
        if not self._pending:
            return None
        miner = self.chain.next_miner()
        block = Block(
            index=self.chain.next_index,
            prev_digest=self.chain.head_digest,
            miner=miner,
            tick=tick,
            entries=list(self._pending),
        )
        for op in self._pending:
            self.ledger.pay_gas(op.client_id, miner, LOCK_OP_GAS)
        self.chain.append_block(block)
        self._pending.clear()
        return block

    def overlapping_held(self) -> list[tuple[str, str]]:
        """Pairs of lock ids whose Held intervals overlap on an item (should be empty)."""
        pairs = []
        records = sorted(self.records.values(), key=lambda r: r.acquired_order)
        for i, first in enumerate(records):
            first_end = first.released_order if first.released_order is not None else float("inf")
            for second in records[i + 1:]:
                if second.acquired_order < first_end and first.overlaps(second.items):
                    pairs.append((first.lock_id, second.lock_id))
        return pairs
