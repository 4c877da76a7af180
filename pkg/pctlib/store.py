"""
Concurrent state repository.

States are dynamically assigned to workers: the first worker to insert a state
becomes its owner. The shared :obj:`LocalizationTable` maps 64-bit fingerprints
of canonical state encodings to state ids, and the :obj:`StateArena` keeps the
encoding and owner of every id. A fingerprint match is only trusted after the
arena confirms full equality, so hash collisions never merge distinct states.

Every stored state gets a dense integer id, used to index its labels: the
``suc`` counter, the blocked, obligation and seed flags, and depending on the
variant either reverse edges (RG) or a father and a ``sons`` counter (RPG).
All of these are numpy arrays in shared memory, sized when the store is
created, so forked workers read and update them in place.
"""
import logging
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import xxhash

from pctlib.atomic import AtomicCounter, StripedLocks, new_lock, shared_array
from pctlib.errors import CapacityError, MemoryCapExceeded, ModelError
from pctlib.models.model import ModelInterface, StateVector

logger = logging.getLogger(__name__)

MAX_LOAD_FACTOR = 0.75
EDGES_PER_SLOT = 4
NO_STATE = -1

BLOCKED = 1
OBLIGATION = 2
SEED = 4

_FINGERPRINT_MASK = (1 << 63) - 1


def fingerprint(key: bytes) -> int:
    # Zero marks an empty slot; 63 bits keep the value a positive int64.
    return (xxhash.xxh64_intdigest(key) & _FINGERPRINT_MASK) or 1


def required_slots(count: int, per_slot: float) -> int:
    bits = 4
    while count > per_slot * (1 << bits):
        bits += 1
    return 1 << bits


class StateArena:
    """
    Canonical encodings of all stored states, one fixed-width row per state
    id, each row tagged with its owner. The rows tagged with a worker form that
    worker's local repository.
    """

    def __init__(self, rows: int, width: int, shared: bool = True):
        self.rows = rows
        self.width = width
        self._vectors = shared_array((rows, width), np.uint8)
        self._owners = shared_array(rows, np.int32)
        self._size = shared_array(1, np.int64)
        self._lock = new_lock(shared)

    def __len__(self) -> int:
        return int(self._size[0])

    def reserve(self, limit: int) -> int:
        """
        Hand out the next id, or :data:`NO_STATE` once ``limit`` ids exist.
        """
        with self._lock:
            sid = int(self._size[0])
            if sid >= limit:
                return NO_STATE
            self._size[0] = sid + 1
        return sid

    def write(self, sid: int, key: bytes, owner: int) -> None:
        self._vectors[sid] = np.frombuffer(key, dtype=np.uint8)
        self._owners[sid] = owner

    def key(self, sid: int) -> bytes:
        return self._vectors[sid].tobytes()

    def matches(self, sid: int, key: bytes) -> bool:
        return self._vectors[sid].tobytes() == key

    def owner(self, sid: int) -> int:
        return int(self._owners[sid])

    def owned(self, worker: int) -> np.ndarray:
        return np.flatnonzero(self._owners[: len(self)] == worker)


class LocalizationTable:
    """
    Open-addressed table of ``2**table_bits`` slots with linear probing. A slot
    holds a fingerprint and the id of the state it was claimed for; once
    claimed, a slot never changes. The owner of a state is read from the arena.

    :raises CapacityError: When an insertion would push the load factor above
            :data:`MAX_LOAD_FACTOR`.
    """

    def __init__(
        self, table_bits: int, arena: StateArena, shared: bool = True, stripes: int = 64
    ):
        self.capacity = 1 << table_bits
        self.arena = arena
        self._mask = self.capacity - 1
        self._fingerprints = shared_array(self.capacity, np.int64)
        self._ids = shared_array(self.capacity, np.int32)
        self._locks = StripedLocks(min(stripes, self.capacity), shared)
        self._used = AtomicCounter(shared=shared)

    @property
    def used(self) -> int:
        return self._used.value

    @property
    def load_factor(self) -> float:
        return self._used.value / self.capacity

    def insert_or_query(self, key: bytes, worker: int, allocate) -> Tuple[int, bool, int]:
        """
        Find the state encoded as ``key`` or claim a slot for it on behalf of
        ``worker``. ``allocate(worker)`` is called exactly once per distinct
        state, under the slot lock, and must return the new state id after
        writing its arena row.

        :return: Tuple ``(state id, is new, owner)``.
        """
        fp = fingerprint(key)
        slot = fp & self._mask
        for _ in range(self.capacity):
            with self._locks.lock(slot):
                found = int(self._fingerprints[slot])
                if found == 0:
                    self._reserve()
                    sid = allocate(worker)
                    self._ids[slot] = sid
                    self._fingerprints[slot] = fp
                    return sid, True, worker
                if found == fp:
                    sid = int(self._ids[slot])
                    if self.arena.matches(sid, key):
                        return sid, False, self.arena.owner(sid)
            slot = (slot + 1) & self._mask
        raise CapacityError("state table full", self.capacity + 1)

    def query(self, key: bytes) -> Optional[Tuple[int, int]]:
        """
        Return ``(state id, owner)`` for ``key`` without inserting it.
        """
        fp = fingerprint(key)
        slot = fp & self._mask
        for _ in range(self.capacity):
            with self._locks.lock(slot):
                found = int(self._fingerprints[slot])
                if found == 0:
                    return None
                if found == fp:
                    sid = int(self._ids[slot])
                    if self.arena.matches(sid, key):
                        return sid, self.arena.owner(sid)
            slot = (slot + 1) & self._mask
        return None

    def _reserve(self) -> None:
        used = self._used.inc()
        if used > MAX_LOAD_FACTOR * self.capacity:
            self._used.dec()
            required = required_slots(used, MAX_LOAD_FACTOR)
            raise CapacityError(
                f"state table full: {used} states need 2**{required.bit_length() - 1} "
                f"slots, the table has 2**{self.capacity.bit_length() - 1}; "
                f"raise --table-bits",
                required=required,
            )


class EdgeLog:
    """
    Reverse edges ``source -> target`` appended by all workers in one shared
    log. Once appends are over, :meth:`index` sorts the log by target so each
    state's predecessors form one contiguous run.

    :raises CapacityError: When the log is full.
    """

    def __init__(self, capacity: int, shared: bool = True):
        self.capacity = capacity
        self._targets = shared_array(capacity, np.int32)
        self._sources = shared_array(capacity, np.int32)
        self._count = AtomicCounter(shared=shared)
        self._indexed = -1
        self._offsets = np.zeros(1, dtype=np.int64)
        self._sorted = np.zeros(0, dtype=np.int32)

    def __len__(self) -> int:
        return self._count.value

    def append(self, targets: Sequence[int], source: int) -> None:
        count = len(targets)
        end = self._count.inc(count)
        if end > self.capacity:
            self._count.dec(count)
            required = required_slots(end, EDGES_PER_SLOT)
            raise CapacityError(
                f"reverse edge log full: {end} edges need a table of "
                f"2**{required.bit_length() - 1} slots; raise --table-bits",
                required=required,
            )
        self._targets[end - count : end] = targets
        self._sources[end - count : end] = source

    def index(self) -> None:
        count = len(self)
        targets = self._targets[:count]
        order = np.argsort(targets, kind="stable")
        self._sorted = self._sources[:count][order]
        per_target = np.bincount(targets, minlength=1)
        self._offsets = np.concatenate(([0], np.cumsum(per_target)))
        self._indexed = count

    def sources(self, target: int) -> List[int]:
        if self._indexed != len(self):
            self.index()
        if target + 1 >= len(self._offsets):
            return []
        start, end = self._offsets[target], self._offsets[target + 1]
        return self._sorted[start:end].tolist()


class StateStore:
    """
    Shared state space of one check run. All methods may be called concurrently
    from every worker once the workers have been forked from the process that
    created the store.

    :param model: The model whose states are stored; provides the encoding.
    :param workers: Number of workers.
    :param table_bits: Log2 of the localization table capacity.
    :param max_states: Abort with :obj:`MemoryCapExceeded` beyond this count.
    :param record_parents: Remember the discovery parent of every state, for
            witness paths.
    :param record_predecessors: Allocate the reverse edge log (RG).
    """

    def __init__(
        self,
        model: ModelInterface,
        workers: int,
        table_bits: int = 22,
        max_states: Optional[int] = None,
        record_parents: bool = False,
        record_predecessors: bool = True,
    ):
        self.model = model
        self.workers = workers
        self.max_states = max_states
        shared = workers > 1
        capacity = 1 << table_bits
        rows = int(MAX_LOAD_FACTOR * capacity)
        self._limit = rows if max_states is None else min(rows, max_states)
        width = len(model.encode(model.initial()))
        self.arena = StateArena(self._limit, width, shared)
        self.table = LocalizationTable(table_bits, self.arena, shared)
        self._locks = StripedLocks(64, shared)
        self._suc = shared_array(self._limit, np.int32)
        self._sons = shared_array(self._limit, np.int32)
        self._father = shared_array(self._limit, np.int32, fill=NO_STATE)
        self._flags = shared_array(self._limit, np.uint8)
        self._parents = None
        if record_parents:
            self._parents = shared_array(self._limit, np.int32, fill=NO_STATE)
        self._edges = None
        if record_predecessors:
            self._edges = EdgeLog(EDGES_PER_SLOT * capacity, shared)

    def __len__(self) -> int:
        return len(self.arena)

    @property
    def size(self) -> int:
        return len(self.arena)

    @property
    def capacity(self) -> int:
        """
        Maximum number of states this store can hold.
        """
        return self._limit

    def intern(self, state: StateVector, worker: int) -> Tuple[int, bool, int]:
        """
        Insert ``state`` on behalf of ``worker`` or find it. Exactly one caller
        per distinct state receives ``is_new=True``; that caller's worker owns
        the state.

        :return: Tuple ``(state id, is new, owner)``.
        :raises CapacityError: If the localization table is full.
        :raises MemoryCapExceeded: If ``max_states`` would be exceeded.
        :raises ModelError: If the encoding width differs between states.
        """
        key = self.model.encode(state)
        if len(key) != self.arena.width:
            raise ModelError(
                f"state {state} encodes to {len(key)} bytes, expected "
                f"{self.arena.width}"
            )

        def allocate(owner: int) -> int:
            sid = self.arena.reserve(self._limit)
            if sid == NO_STATE:
                raise MemoryCapExceeded(f"more than {self._limit} states stored")
            self.arena.write(sid, key, owner)
            return sid

        return self.table.insert_or_query(key, worker, allocate)

    def lookup(self, state: StateVector) -> Optional[int]:
        found = self.table.query(self.model.encode(state))
        return None if found is None else found[0]

    def vector(self, sid: int) -> StateVector:
        return self.model.decode(self.arena.key(sid))

    def owner(self, sid: int) -> int:
        return self.arena.owner(sid)

    def owned_states(self, worker: int) -> Iterator[int]:
        """
        Iterate over the states owned by ``worker``. Only meaningful once the
        forward phase has finished and ownership is stable.
        """
        return iter(self.arena.owned(worker).tolist())

    # suc counters

    def suc_set(self, sid: int, value: int) -> None:
        with self._locks.lock(sid):
            self._suc[sid] = value

    def suc_get(self, sid: int) -> int:
        return int(self._suc[sid])

    def suc_dec(self, sid: int) -> int:
        """
        Decrement ``suc(sid)`` and return the new value. Exactly one caller
        observes zero for each cleared state.
        """
        with self._locks.lock(sid):
            value = int(self._suc[sid])
            if value <= 0:
                raise AssertionError(f"suc underflow on state {sid}")
            self._suc[sid] = value - 1
            return value - 1

    def is_cleared(self, sid: int) -> bool:
        return int(self._suc[sid]) == 0

    # flags

    def _set_flag(self, sid: int, flag: int) -> None:
        with self._locks.lock(sid):
            self._flags[sid] |= flag

    def set_blocked(self, sid: int) -> None:
        with self._locks.lock(sid):
            self._suc[sid] = 1
            self._flags[sid] |= BLOCKED

    def is_blocked(self, sid: int) -> bool:
        return bool(self._flags[sid] & BLOCKED)

    def set_obligation(self, sid: int) -> None:
        self._set_flag(sid, OBLIGATION)

    def is_obligation(self, sid: int) -> bool:
        return bool(self._flags[sid] & OBLIGATION)

    def mark_seed(self, sid: int) -> None:
        self._set_flag(sid, SEED)

    def seeds(self) -> np.ndarray:
        """
        Ids of the states marked as seeds, in increasing order.
        """
        return np.flatnonzero(self._flags[: self.size] & SEED)

    # parental graph (RPG)

    def father_set_once(self, sid: int, parent: int) -> bool:
        """
        Record ``parent`` as the father of ``sid`` unless a father is already
        recorded. Returns whether this call won.
        """
        with self._locks.lock(sid):
            if self._father[sid] != NO_STATE:
                return False
            self._father[sid] = parent
            return True

    def father(self, sid: int) -> Optional[int]:
        parent = int(self._father[sid])
        return None if parent == NO_STATE else parent

    def sons_inc(self, sid: int, delta: int = 1) -> int:
        with self._locks.lock(sid):
            value = int(self._sons[sid]) + delta
            self._sons[sid] = value
            return value

    def sons_dec(self, sid: int) -> int:
        with self._locks.lock(sid):
            value = int(self._sons[sid])
            if value <= 0:
                raise AssertionError(f"sons underflow on state {sid}")
            self._sons[sid] = value - 1
            return value - 1

    def sons(self, sid: int) -> int:
        return int(self._sons[sid])

    # reverse graph (RG)

    def add_predecessor(self, sid: int, pred: int) -> None:
        self.add_predecessors([sid], pred)

    def add_predecessors(self, sids: Sequence[int], pred: int) -> None:
        """
        Record ``pred`` as a predecessor of every state in ``sids``.
        """
        if self._edges is None:
            raise AssertionError("store does not record predecessors")
        self._edges.append(sids, pred)

    def index_predecessors(self) -> None:
        """
        Group the recorded reverse edges by target. Called once appends are
        over and before workers are forked, so they share the index.
        """
        if self._edges is not None:
            self._edges.index()

    def predecessors(self, sid: int) -> List[int]:
        if self._edges is None:
            return []
        return self._edges.sources(sid)

    # discovery parents (witness paths)

    def set_parent(self, sid: int, parent: int) -> None:
        if self._parents is not None:
            self._parents[sid] = parent

    def parent(self, sid: int) -> Optional[int]:
        """
        Return the father of ``sid`` if one is recorded, else its discovery
        parent if parents are recorded, else ``None``.
        """
        father = self.father(sid)
        if father is not None:
            return father
        if self._parents is None or self._parents[sid] == NO_STATE:
            return None
        return int(self._parents[sid])

    # instrumentation

    @property
    def reverse_edges_stored(self) -> int:
        return 0 if self._edges is None else len(self._edges)

    @property
    def parent_links_stored(self) -> int:
        return int(np.count_nonzero(self._father[: self.size] != NO_STATE))

    def memory_estimate(self) -> int:
        """
        Bytes of the stored state space actually in use: the table arrays, one
        arena row and the labels per state, eight bytes per stored reverse
        edge.
        """
        table = self.table.capacity * (8 + 4)
        per_state = self.arena.width + 4 + 4 + 4 + 4 + 1
        if self._parents is not None:
            per_state += 4
        return table + self.size * per_state + 8 * self.reverse_edges_stored
