from collections import deque
from typing import FrozenSet, List, Tuple

from pctlib.errors import ValidationError

StateVector = Tuple[int, ...]


class ModelInterface(object):
    """
    A Kripke structure given implicitly: an initial state, a successor function
    and a labeling function. Implementations must be pure functions over an
    immutable description, since many workers call them concurrently.
    """

    def initial(self) -> StateVector:
        raise NotImplementedError

    def successors(self, state: StateVector) -> List[StateVector]:
        """
        Return the distinct successors of ``state``, in a deterministic order.
        """
        raise NotImplementedError

    def propositions(self) -> List[str]:
        raise NotImplementedError

    def labeling(self, state: StateVector) -> FrozenSet[str]:
        raise NotImplementedError

    def encode(self, state: StateVector) -> bytes:
        """
        Return the canonical byte encoding of ``state``: two states are equal
        iff their encodings are equal. All states of a model must encode to the
        same number of bytes.
        """
        return bytes(state)

    def decode(self, data: bytes) -> StateVector:
        """
        Inverse of :meth:`encode`.
        """
        return tuple(data)


def unique(states: List[StateVector]) -> List[StateVector]:
    return list(dict.fromkeys(states))


def reachable(model: ModelInterface, limit: int = 10**6) -> List[StateVector]:
    """
    Return the reachable states of ``model`` in breadth-first order.
    """
    init = model.initial()
    index = {init: 0}
    order = [init]
    queue = deque([init])
    while queue:
        state = queue.popleft()
        for succ in model.successors(state):
            if succ not in index:
                if len(order) >= limit:
                    raise ValidationError(
                        f"model exceeds the size cap of {limit} states"
                    )
                index[succ] = len(order)
                order.append(succ)
                queue.append(succ)
    return order
