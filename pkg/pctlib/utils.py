import dataclasses
import typing
from typing import Any

import typeguard

from pctlib.errors import ValidationError


def validate_fields(instance):
    classname = instance.__class__.__name__
    hints = typing.get_type_hints(instance.__class__)
    for field in dataclasses.fields(instance):
        value = getattr(instance, field.name)
        try:
            typeguard.check_type(value, hints[field.name])
        except typeguard.TypeCheckError as err:
            raise ValidationError(f"{classname}.{field.name}: {err}") from None


def validate_names(items: Any, label: str) -> None:
    once = set()
    twice = set()
    for item in items:
        if item.name not in once:
            once.add(item.name)
        else:
            twice.add(item.name)
    if twice:
        text = ", ".join(repr(name) for name in sorted(twice))
        raise ValidationError(f"duplicate {label} name(s): {text}")
