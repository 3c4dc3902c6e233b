"""Input validation helpers used by the estimator front-end."""
from __future__ import annotations

import enum
import numbers
from typing import Any, Iterable, Type, TypeVar

from .ingest import HandleRecord, _record_from_json
from .model import TraceRecord

E = TypeVar("E", bound=enum.Enum)


def check_records(X: Iterable[Any]) -> list[TraceRecord | HandleRecord]:
    """Coerce ``X`` to a list of trace/handle records.

    JSON-shaped dicts (``account_id``, ``ts``, ...) are converted; anything
    else raises ``TypeError``.
    """
    if isinstance(X, (str, bytes)):
        raise TypeError("expected an iterable of records, got a string")
    out = []
    for i, r in enumerate(X):
        if isinstance(r, (TraceRecord, HandleRecord)):
            out.append(r)
        elif isinstance(r, dict):
            try:
                out.append(_record_from_json(r))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"record {i}: {exc}") from None
        else:
            raise TypeError(f"record {i} has unsupported type {type(r).__name__}")
    return out


def check_scalar_int(name: str, value, min_val: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an int, got {type(value).__name__}")
    if min_val is not None and value < min_val:
        raise ValueError(f"{name} must be >= {min_val}, got {value}")
    return int(value)


def check_fraction(name: str, value) -> float:
    """Validate a value in the half-open interval (0, 1]."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a float, got {type(value).__name__}")
    if not (0.0 < value <= 1.0):
        raise ValueError(f"{name} must be in (0,1]")
    return float(value)


def check_enum(name: str, value, kind: Type[E]) -> E:
    try:
        return kind(value)
    except ValueError:
        allowed = ", ".join(m.value for m in kind)
        raise ValueError(f"{name} must be one of {{{allowed}}}, got {value!r}") from None
