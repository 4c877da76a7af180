"""
Parametric benchmark families. Both generators produce models whose state
vectors hold one small integer per component, encoded one byte each.
"""
from typing import FrozenSet, List

from pctlib.errors import ModelError
from pctlib.models.model import ModelInterface, StateVector, unique

IDLE, WAITING, CRITICAL = 0, 1, 2
THINKING, HUNGRY, HAS_LEFT, EATING = 0, 1, 2, 3


class TokenRing(ModelInterface):
    """
    ``n`` stations on a ring and a single circulating token. A station is idle,
    waiting or critical; it may only enter its critical section while holding
    the token, and passes the token on when it leaves the critical section or
    when it holds the token while idle. State vector: ``(token, s_0, ..., s_n-1)``.

    Propositions: ``cs_i`` (station i is critical), ``wait_i`` (station i is
    waiting) and ``tok_i`` (station i holds the token).
    """

    def __init__(self, n: int):
        if not 2 <= n <= 30:
            raise ModelError(f"token ring size {n} outside of 2..30")
        self.n = n

    def initial(self) -> StateVector:
        return (0,) + (IDLE,) * self.n

    def successors(self, state: StateVector) -> List[StateVector]:
        token, stations = state[0], list(state[1:])
        result = []
        for i, status in enumerate(stations):
            if status == IDLE:
                result.append(_replace(state, i + 1, WAITING))
        status = stations[token]
        nxt = (token + 1) % self.n
        if status == WAITING:
            result.append(_replace(state, token + 1, CRITICAL))
        elif status == CRITICAL:
            result.append((nxt,) + _replace(state, token + 1, IDLE)[1:])
        else:
            result.append((nxt,) + state[1:])
        return unique(result)

    def propositions(self) -> List[str]:
        names = []
        for i in range(self.n):
            names.extend([f"cs_{i}", f"wait_{i}", f"tok_{i}"])
        return names

    def labeling(self, state: StateVector) -> FrozenSet[str]:
        labels = {f"tok_{state[0]}"}
        for i, status in enumerate(state[1:]):
            if status == CRITICAL:
                labels.add(f"cs_{i}")
            elif status == WAITING:
                labels.add(f"wait_{i}")
        return frozenset(labels)


class Philosophers(ModelInterface):
    """
    Dining philosophers where philosopher ``i`` picks up fork ``i`` (left) and
    then fork ``i+1 mod n`` (right). When every philosopher holds a left fork
    the system is deadlocked. State vector: one phase per philosopher.

    Propositions: ``hungry_i`` (wants to eat, holding at most the left fork)
    and ``eat_i``. Thinking philosophers carry no label.
    """

    def __init__(self, n: int):
        if not 2 <= n <= 16:
            raise ModelError(f"philosophers count {n} outside of 2..16")
        self.n = n

    def initial(self) -> StateVector:
        return (THINKING,) * self.n

    def _fork_free(self, state: StateVector, fork: int) -> bool:
        left_user = fork
        right_user = (fork - 1) % self.n
        return state[left_user] not in (HAS_LEFT, EATING) and state[right_user] != EATING

    def successors(self, state: StateVector) -> List[StateVector]:
        result = []
        for i, phase in enumerate(state):
            if phase == THINKING:
                result.append(_replace(state, i, HUNGRY))
            elif phase == HUNGRY:
                if self._fork_free(state, i):
                    result.append(_replace(state, i, HAS_LEFT))
            elif phase == HAS_LEFT:
                if self._fork_free(state, (i + 1) % self.n):
                    result.append(_replace(state, i, EATING))
            else:
                result.append(_replace(state, i, THINKING))
        return unique(result)

    def propositions(self) -> List[str]:
        names = []
        for i in range(self.n):
            names.extend([f"hungry_{i}", f"eat_{i}"])
        return names

    def labeling(self, state: StateVector) -> FrozenSet[str]:
        labels = set()
        for i, phase in enumerate(state):
            if phase == EATING:
                labels.add(f"eat_{i}")
            elif phase != THINKING:
                labels.add(f"hungry_{i}")
        return frozenset(labels)


def _replace(state: StateVector, pos: int, value: int) -> StateVector:
    return state[:pos] + (value,) + state[pos + 1 :]


def generate_token_ring(n: int) -> TokenRing:
    return TokenRing(n)


def generate_philosophers(n: int) -> Philosophers:
    return Philosophers(n)


GENERATORS = {
    "token-ring": generate_token_ring,
    "philosophers": generate_philosophers,
}


def generate(spec: str) -> ModelInterface:
    """
    Build a model from a ``<family>:<n>`` string, e.g. ``token-ring:4``.
    """
    family, _, size = spec.partition(":")
    if family not in GENERATORS:
        known = ", ".join(sorted(GENERATORS))
        raise ModelError(f"unknown model family '{family}' (expected one of {known})")
    try:
        n = int(size)
    except ValueError:
        raise ModelError(f"malformatted model size in '{spec}'") from None
    return GENERATORS[family](n)
