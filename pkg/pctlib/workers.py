"""
The SPMD runtime shared by the forward and backward passes.

Worker 0 runs in the calling process; workers 1..N-1 are forked processes, so
pure-Python model callbacks execute in parallel. Everything the workers share
lives in arrays from :func:`pctlib.atomic.shared_array`.

Each worker owns a LIFO stack of integer items guarded by its own lock. A
worker whose stack runs dry steals a batch from the bottom of another worker's
stack, choosing victims round-robin. A phase ends when every pushed item has
been marked done: each worker counts its pushes and completions under its
stack lock, and an idle worker sums all completions before all pushes, so a
zero difference means nothing was in flight.
"""
import logging
import threading
import time
from typing import Callable, List, Optional, Sequence

import numpy as np

from pctlib.atomic import CONTEXT, WriteOnce, new_lock, shared_array
from pctlib.errors import CheckTimeout

logger = logging.getLogger(__name__)

_IDLE_SLEEP = 0.0002
_JOIN_POLL = 0.05
_ABORTED = -1


class WorkPool:
    """
    Per-worker stacks with work stealing, termination detection, an early-stop
    cell and a deadline.

    :param workers: Number of workers.
    :param batch_size: Maximum number of items moved by one steal.
    :param deadline: Absolute :func:`time.monotonic` deadline, if any.
    :param capacity: Maximum number of items one stack holds at a time.
    """

    def __init__(
        self,
        workers: int,
        batch_size: int = 64,
        deadline: Optional[float] = None,
        capacity: int = 1 << 16,
    ):
        self.workers = workers
        self.batch_size = batch_size
        self.deadline = deadline
        self.capacity = capacity
        self._shared = workers > 1
        self._items = shared_array((workers, capacity), np.int32)
        # bottom and top index of every stack
        self._bounds = shared_array((workers, 2), np.int64)
        self._pushed = shared_array(workers, np.int64)
        self._done = shared_array(workers, np.int64)
        self._steals = shared_array(workers, np.int64)
        self._victims = shared_array(workers, np.int64)
        self._victims[:] = (np.arange(workers) + 1) % workers
        self._locks = [new_lock(self._shared) for _ in range(workers)]
        self._verdict = WriteOnce(shared=self._shared)
        self._aborted = shared_array(1, np.int8)
        self._barriers: List[threading.Barrier] = []

    @property
    def steals(self) -> int:
        return int(self._steals.sum())

    @property
    def outstanding(self) -> int:
        return int(self._pushed.sum() - self._done.sum())

    @property
    def stopped(self) -> bool:
        return self._verdict.is_set

    @property
    def verdict(self) -> Optional[bool]:
        code = self._verdict.get()
        return None if code is None or code == _ABORTED else bool(code)

    def stop(self, verdict: bool) -> bool:
        """
        Publish ``verdict`` and ask every worker to stop. Only the first call
        wins; later calls return False and leave the verdict untouched.
        """
        won = self._verdict.set(int(verdict))
        if won:
            logger.debug("early stop with %r", verdict)
        return won

    def _room(self, worker: int, count: int) -> int:
        # Caller holds the worker's lock. Slides the live items down when the
        # top would run past the end.
        bottom, top = self._bounds[worker].tolist()
        if top + count > self.capacity:
            live = top - bottom
            if live + count > self.capacity:
                raise AssertionError(f"work stack {worker} overflow")
            self._items[worker, :live] = self._items[worker, bottom:top]
            self._bounds[worker] = (0, live)
            top = live
        return top

    def push(self, worker: int, item: int) -> None:
        with self._locks[worker]:
            top = self._room(worker, 1)
            self._items[worker, top] = item
            self._bounds[worker, 1] = top + 1
            self._pushed[worker] += 1

    def extend(self, worker: int, items: Sequence[int]) -> None:
        count = len(items)
        if not count:
            return
        with self._locks[worker]:
            top = self._room(worker, count)
            self._items[worker, top : top + count] = items
            self._bounds[worker, 1] = top + count
            self._pushed[worker] += count

    def pop(self, worker: int) -> Optional[int]:
        with self._locks[worker]:
            bottom, top = self._bounds[worker].tolist()
            if top == bottom:
                return None
            top -= 1
            item = int(self._items[worker, top])
            if top == bottom:
                self._bounds[worker] = 0
            else:
                self._bounds[worker, 1] = top
            return item

    def done(self, worker: int) -> None:
        """
        Mark one item taken by ``worker`` as fully processed. Children must be
        pushed before their parent is marked done.
        """
        with self._locks[worker]:
            self._done[worker] += 1

    def steal_work(self, thief: int) -> List[int]:
        """
        Move up to ``batch_size`` items from the bottom of another worker's
        stack onto the thief's stack, trying victims round-robin. Returns the
        stolen batch, which is empty if every other stack is empty.
        """
        start = int(self._victims[thief])
        for offset in range(self.workers):
            victim = (start + offset) % self.workers
            if victim == thief:
                continue
            with self._locks[victim]:
                bottom, top = self._bounds[victim].tolist()
                count = min(self.batch_size, top - bottom)
                batch = self._items[victim, bottom : bottom + count].tolist()
                if count == top - bottom:
                    self._bounds[victim] = 0
                else:
                    self._bounds[victim, 0] = bottom + count
            if batch:
                self._victims[thief] = (victim + 1) % self.workers
                with self._locks[thief]:
                    top = self._room(thief, count)
                    self._items[thief, top : top + count] = batch
                    self._bounds[thief, 1] = top + count
                self._steals[thief] += 1
                return batch
        return []

    def _quiescent(self) -> bool:
        # Completions first: a push always precedes its completion.
        done = 0
        for worker in range(self.workers):
            with self._locks[worker]:
                done += int(self._done[worker])
        pushed = 0
        for worker in range(self.workers):
            with self._locks[worker]:
                pushed += int(self._pushed[worker])
        return pushed == done

    def check_deadline(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise CheckTimeout("check exceeded its time limit")

    def next_item(self, worker: int) -> Optional[int]:
        """
        Return the next item for ``worker``, stealing if needed, or ``None``
        once the pool is stopped or the phase has terminated.

        :raises CheckTimeout: If the deadline has passed.
        """
        while True:
            if self.stopped:
                return None
            self.check_deadline()
            item = self.pop(worker)
            if item is not None:
                return item
            if self.workers > 1 and self.steal_work(worker):
                continue
            if self._quiescent():
                return None
            time.sleep(_IDLE_SLEEP)

    def barrier(self, action: Optional[Callable[[], None]] = None) -> threading.Barrier:
        """
        Create a barrier over all workers. It must be created before
        :meth:`run`. Barriers created here are aborted when any worker fails,
        so no worker waits forever. ``action`` runs in whichever worker
        arrives last and may only touch shared state.
        """
        factory = CONTEXT.Barrier if self._shared else threading.Barrier
        barrier = factory(self.workers, action=action)
        self._barriers.append(barrier)
        return barrier

    def wait(self, barrier: threading.Barrier) -> None:
        """
        Wait at ``barrier`` until the deadline at most.

        :raises CheckTimeout: If the deadline passes while waiting.
        """
        timeout = None
        if self.deadline is not None:
            timeout = max(self.deadline - time.monotonic(), 0.0)
        try:
            barrier.wait(timeout)
        except threading.BrokenBarrierError:
            # Failing workers abort barriers after marking the pool aborted;
            # any other break is a wait that ran out of time.
            if not self._aborted[0]:
                raise CheckTimeout("check exceeded its time limit") from None
            raise

    def _abort(self) -> None:
        self._aborted[0] = 1
        self._verdict.set(_ABORTED)
        for barrier in self._barriers:
            barrier.abort()

    def _guard(
        self,
        target: Callable[[int], None],
        worker: int,
        report: Callable[[BaseException], None],
    ) -> None:
        try:
            target(worker)
        except threading.BrokenBarrierError as err:
            report(err)
        except BaseException as err:
            logger.debug("worker %d failed: %r", worker, err)
            self._abort()
            report(err)

    def _child(self, target: Callable[[int], None], worker: int, errors) -> None:
        def report(err: BaseException) -> None:
            try:
                errors.put(err)
            except Exception:
                errors.put(RuntimeError(f"worker {worker} failed: {err!r}"))

        self._guard(target, worker, report)

    def _join(self, processes, queue, errors: List[BaseException]) -> None:
        # The queue is drained while polling so no child blocks on a full pipe.
        pending = list(processes)
        try:
            while pending:
                while not queue.empty():
                    errors.append(queue.get())
                for process in list(pending):
                    process.join(_JOIN_POLL)
                    if process.exitcode is None:
                        continue
                    pending.remove(process)
                    if process.exitcode != 0:
                        self._abort()
                        errors.append(
                            RuntimeError(
                                f"{process.name} exited with code {process.exitcode}"
                            )
                        )
        except KeyboardInterrupt:
            self._abort()
            for process in pending:
                process.join()
            raise

    def run(self, target: Callable[[int], None]) -> None:
        """
        Run ``target(worker_id)`` on every worker and wait for all of them.
        The first worker exception is re-raised in the caller.
        """
        errors: List[BaseException] = []
        if self.workers == 1:
            self._guard(target, 0, errors.append)
        else:
            queue = CONTEXT.SimpleQueue()
            processes = [
                CONTEXT.Process(
                    target=self._child,
                    args=(target, w, queue),
                    name=f"worker-{w}",
                    daemon=True,
                )
                for w in range(1, self.workers)
            ]
            for process in processes:
                process.start()
            self._guard(target, 0, errors.append)
            self._join(processes, queue, errors)
            while not queue.empty():
                errors.append(queue.get())
        if errors:
            primary = [
                e for e in errors if not isinstance(e, threading.BrokenBarrierError)
            ]
            raise (primary or errors)[0]
