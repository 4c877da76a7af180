"""
Run options of a check. Options can be given programmatically, loaded from a
YAML file, or assembled by the command-line front end::

    variant: rpg
    workers: 4
    table_bits: 20
    timeout: 30.0
"""
import enum
import pathlib
from dataclasses import dataclass
from typing import Optional, Union

import dacite
import yaml

from pctlib.atomic import can_fork
from pctlib.errors import ValidationError
from pctlib.utils import validate_fields


class Variant(enum.Enum):
    RG = "rg"
    RPG = "rpg"


class Order(enum.Enum):
    LIFO = "lifo"


@dataclass
class CheckOptions:
    """
    :ivar variant: Backward algorithm, reverse graph or reverse parental graph.
    :ivar workers: Number of workers. Workers beyond the first are forked
            processes.
    :ivar table_bits: The localization table has ``2**table_bits`` slots.
    :ivar early_stop: Stop as soon as the verdict is known. Disabling it forces
            full exploration and draining, which is useful for testing.
    :ivar witness: Record discovery parents so forward-phase violations come
            with a path from the initial state.
    :ivar timeout: Wall-clock limit in seconds for the whole check.
    :ivar max_states: Abort once more states than this have been stored.
    :ivar batch_size: Number of items taken from a victim's stack per steal.
    :ivar order: Order in which each worker takes items from its own stack.
    """
    variant: Variant = Variant.RG
    workers: int = 1
    table_bits: int = 22
    early_stop: bool = True
    witness: bool = False
    timeout: Optional[float] = None
    max_states: Optional[int] = None
    batch_size: int = 64
    order: Order = Order.LIFO

    def validate(self):
        validate_fields(self)
        if self.workers < 1:
            raise ValidationError(f"workers must be at least 1, got {self.workers}")
        if self.workers > 1 and not can_fork():
            raise ValidationError(
                "more than one worker needs the fork start method"
            )
        if not 4 <= self.table_bits <= 30:
            raise ValidationError(
                f"table_bits must be within 4..30, got {self.table_bits}"
            )
        if self.batch_size < 1:
            raise ValidationError(
                f"batch_size must be at least 1, got {self.batch_size}"
            )
        if self.timeout is not None and self.timeout <= 0:
            raise ValidationError(f"timeout must be positive, got {self.timeout}")
        if self.max_states is not None and self.max_states < 1:
            raise ValidationError(
                f"max_states must be at least 1, got {self.max_states}"
            )


def options_from_dict(data: dict) -> CheckOptions:
    try:
        options = dacite.from_dict(
            data_class=CheckOptions,
            data=data,
            config=dacite.Config(cast=[Variant, Order, float], strict=True),
        )
    except (dacite.DaciteError, ValueError) as err:
        raise ValidationError(f"invalid options: {err}") from None
    options.validate()
    return options


def load_options(path: Union[str, pathlib.Path]) -> CheckOptions:
    with open(path) as f:
        data = yaml.safe_load(f)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValidationError(f"options file '{path}' must contain a mapping")
    return options_from_dict(data)
