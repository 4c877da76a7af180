"""
Counters, write-once cells and lock stripes shared between worker processes.

Workers are forked, so every value two workers can both see lives in an
anonymous shared mapping viewed as a numpy array, and every critical section
uses a :mod:`multiprocessing` lock. Single-worker runs never fork and use
cheaper :mod:`threading` locks instead. Per-state operations hash onto a fixed
set of lock stripes: ``stripe = key & (num_stripes - 1)``.
"""
import mmap
import multiprocessing
import threading
from typing import List, Sequence, Union

import numpy as np

try:
    CONTEXT = multiprocessing.get_context("fork")
except ValueError:
    # No fork on this platform: only single-worker runs are possible.
    CONTEXT = None


def can_fork() -> bool:
    return CONTEXT is not None


def new_lock(shared: bool = True):
    """
    Return a lock usable across forked workers, or a plain thread lock when
    ``shared`` is false.
    """
    if shared:
        return CONTEXT.Lock()
    return threading.Lock()


def shared_array(
    shape: Union[int, Sequence[int]], dtype, fill: int = 0
) -> np.ndarray:
    """
    Allocate a numpy array in an anonymous shared mapping. Processes forked
    afterwards see and modify the same memory. Pages are zero until first
    written, and the mapping is released together with its last array view.
    """
    dtype = np.dtype(dtype)
    count = int(np.prod(shape))
    buffer = mmap.mmap(-1, max(count * dtype.itemsize, 1))
    array = np.frombuffer(buffer, dtype=dtype, count=count).reshape(shape)
    if fill:
        array.fill(fill)
    return array


class AtomicCounter:
    def __init__(self, value: int = 0, shared: bool = True):
        self._cell = shared_array(1, np.int64)
        self._cell[0] = value
        self._lock = new_lock(shared)

    @property
    def value(self) -> int:
        return int(self._cell[0])

    def inc(self, delta: int = 1) -> int:
        with self._lock:
            value = int(self._cell[0]) + delta
            self._cell[0] = value
            return value

    def dec(self, delta: int = 1) -> int:
        return self.inc(-delta)

    def set(self, value: int) -> None:
        with self._lock:
            self._cell[0] = value


class StripedLocks:
    """
    A power-of-two array of locks; ``lock(key)`` returns the stripe guarding
    ``key``. Two keys on the same stripe serialize, distinct stripes do not.
    """

    def __init__(self, num_stripes: int = 256, shared: bool = True):
        if num_stripes <= 0 or num_stripes & (num_stripes - 1):
            raise ValueError("num_stripes must be a positive power of 2")
        self._locks: List = [new_lock(shared) for _ in range(num_stripes)]
        self._mask = num_stripes - 1

    def __len__(self) -> int:
        return len(self._locks)

    def lock(self, key: int):
        return self._locks[key & self._mask]


class WriteOnce:
    """
    A cell of ``size`` integers that accepts its first value and rejects every
    later one. ``get`` returns a single integer for one-integer cells and a
    tuple otherwise.
    """

    def __init__(self, size: int = 1, shared: bool = True):
        # cells[0] flags the cell as written.
        self._cells = shared_array(size + 1, np.int64)
        self._lock = new_lock(shared)

    def set(self, *values: int) -> bool:
        if len(values) != len(self._cells) - 1:
            raise ValueError(f"expected {len(self._cells) - 1} value(s)")
        with self._lock:
            if self._cells[0]:
                return False
            self._cells[1:] = values
            self._cells[0] = 1
            return True

    @property
    def is_set(self) -> bool:
        return bool(self._cells[0])

    def get(self, default=None):
        with self._lock:
            if not self._cells[0]:
                return default
            values = tuple(int(v) for v in self._cells[1:])
        return values[0] if len(values) == 1 else values
