"""
Validation helpers shared by configs, services and commands.
Every failure raises ValidationError naming the offending field.
"""

import math
import logging
from typing import Any, Iterable

from utils.error_handlers import ShapeError, ValidationError

logger = logging.getLogger('attnseg.validation')


def validate_range(value: Any, field: str, low: float = None, high: float = None,
                   low_inclusive: bool = True, high_inclusive: bool = True) -> float:
    """
    Check that a numeric value lies within [low, high] (bounds optional).

    Raises:
        ValidationError: If the value is not a finite number or falls outside the range
    """
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{field} must be a number, got {value!r}", field, value)

    if math.isnan(number):
        raise ValidationError(f"{field} must not be NaN", field, value)

    if low is not None:
        too_low = number < low if low_inclusive else number <= low
        if too_low:
            bracket = '[' if low_inclusive else '('
            raise ValidationError(f"{field} must be {bracket}{low}, ...; got {value}", field, value)
    if high is not None:
        too_high = number > high if high_inclusive else number >= high
        if too_high:
            bracket = ']' if high_inclusive else ')'
            raise ValidationError(f"{field} must be ..., {high}{bracket}; got {value}", field, value)

    return number


def validate_probability(value: Any, field: str) -> float:
    """Values in [0, 1]"""
    return validate_range(value, field, 0.0, 1.0)


def validate_threshold(value: Any, field: str = 'threshold') -> float:
    """Values in the open interval (0, 1)"""
    return validate_range(value, field, 0.0, 1.0, low_inclusive=False, high_inclusive=False)


def validate_positive_int(value: Any, field: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        try:
            if float(value) != int(value):
                raise ValueError
            value = int(value)
        except (TypeError, ValueError):
            raise ValidationError(f"{field} must be an integer, got {value!r}", field, value)
    if value < minimum:
        raise ValidationError(f"{field} must be >= {minimum}, got {value}", field, value)
    return value


def validate_choice(value: Any, field: str, choices: Iterable[Any]) -> Any:
    choices = list(choices)
    if value not in choices:
        raise ValidationError(f"{field} must be one of {choices}, got {value!r}", field, value)
    return value


def validate_same_shape(a_shape, b_shape, what: str):
    """Raise ShapeError when two shapes differ"""
    if tuple(a_shape) != tuple(b_shape):
        raise ShapeError(f"{what}: shape mismatch {tuple(a_shape)} vs {tuple(b_shape)}",
                         tuple(a_shape), tuple(b_shape))
