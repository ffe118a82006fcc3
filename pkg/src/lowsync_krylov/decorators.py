"""Decorators linking tests to requirement IDs in design/specs."""

import functools
from typing import Any, Callable, Optional

import pytest

# requirement_id -> tests claiming it
_requirement_registry: dict[str, list[dict[str, Optional[str]]]] = {}


def requirement(
    requirement_id: str,
    description: str,
    notes: Optional[str] = None,
) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """
    Link a test function to a requirement.

    Usage:
        @requirement("KRN-001", "cholesky_flagged returns the upper factor")
        def test_cholesky_factor():
            ...

    The test gets the ``requirement`` and ``requirement_id(id)`` markers, so
    ``pytest -m requirement`` selects every tagged test.
    """

    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        _requirement_registry.setdefault(requirement_id, []).append(
            {
                "test_path": f"{func.__module__}::{func.__qualname__}",
                "description": description,
                "notes": notes,
            }
        )

        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            return func(*args, **kwargs)

        wrapper._requirement_id = requirement_id  # type: ignore[attr-defined]
        wrapper._requirement_description = description  # type: ignore[attr-defined]
        marked = pytest.mark.requirement(wrapper)
        return pytest.mark.requirement_id(requirement_id)(marked)

    return decorator


def get_requirement_registry() -> dict[str, list[dict[str, Optional[str]]]]:
    """All registered requirement -> test mappings."""
    return {k: list(v) for k, v in _requirement_registry.items()}


def clear_registry() -> None:
    _requirement_registry.clear()
