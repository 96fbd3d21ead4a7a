"""Base classes and array field types for all toolkit records."""

from __future__ import annotations

import math
from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer


def _readonly_float_array(value: Any) -> np.ndarray:
    """Copy input into a read-only float64 array."""
    arr = np.array(value, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _array_to_list(value: np.ndarray) -> Any:
    return value.tolist()


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_readonly_float_array),
    PlainSerializer(_array_to_list, when_used="json"),
]
"""A numpy float64 array, copied and frozen on validation, dumped as nested lists in JSON."""


def _readonly_int_array(value: Any) -> np.ndarray:
    arr = np.array(value, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def _readonly_str_array(value: Any) -> np.ndarray:
    arr = np.array([str(v) for v in value], dtype=object)
    arr.setflags(write=False)
    return arr


Int64Array = Annotated[
    np.ndarray,
    BeforeValidator(_readonly_int_array),
    PlainSerializer(_array_to_list, when_used="json"),
]
"""A read-only numpy int64 array (nanosecond timestamps)."""

StrArray = Annotated[
    np.ndarray,
    BeforeValidator(_readonly_str_array),
    PlainSerializer(_array_to_list, when_used="json"),
]
"""A read-only numpy object array of strings (per-record tickers)."""


def parse_bound(value: Any) -> float:
    """Parse a possibly unbounded positive limit.

    Accepts numbers, numeric strings, and "inf"/"infinity"/None for an unbounded limit.
    """
    if value is None:
        return math.inf
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinity", "+inf", "none", "unbounded"):
            return math.inf
        return float(text)
    return float(value)


def format_bound(value: float) -> str:
    """Format a limit the way tables label it ("1.00", "inf")."""
    return "inf" if math.isinf(value) else f"{value:.2f}"


class DCWBaseModel(BaseModel):
    """Base model for all domain records and configuration objects.

    Configures Pydantic for numerical records:
    - frozen=True makes records immutable and safe to share across threads
    - arbitrary_types_allowed=True admits numpy arrays (see FloatArray)
    - extra="forbid" rejects unknown keys, so configuration typos are errors
    - validate_default=True runs validators on defaults as well
    - ser_json_inf_nan="constants" keeps unbounded limits and undefined R^2 in JSON
    """

    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        extra="forbid",
        validate_default=True,
        str_strip_whitespace=True,
        ser_json_inf_nan="constants",
    )
