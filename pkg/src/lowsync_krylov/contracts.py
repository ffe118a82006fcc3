"""Runtime pre/postconditions for numerical entry points."""

import functools
import inspect
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, TypeVar, Union

from .errors import UsageError

# A condition is either a bare predicate or a (predicate, message) pair.
Predicate = Callable[..., bool]
Condition = Union[Predicate, tuple[Predicate, str]]

F = TypeVar("F", bound=Callable[..., Any])


class ContractError(UsageError):
    """Raised when a contract condition fails."""

    def __init__(
        self,
        message: str,
        operation: Optional[str] = None,
        condition_type: str = "unknown",
        condition_index: int = 0,
    ):
        self.operation = operation
        self.condition_type = condition_type
        self.condition_index = condition_index
        super().__init__(message)


@dataclass
class ContractInfo:
    """Conditions attached to a decorated function."""

    requires: list[Condition]
    ensures: list[Condition]
    func_name: str
    func_module: str
    parameters: list[str] = field(default_factory=list)

    @property
    def full_name(self) -> str:
        return f"{self.func_module}.{self.func_name}"


def contract(
    requires: Optional[list[Condition]] = None,
    ensures: Optional[list[Condition]] = None,
) -> Callable[[F], F]:
    """
    Decorator adding runtime contract checking to a function.

    Args:
        requires: Preconditions. Each predicate is called with the bound arguments as
                  keywords (defaults applied), so it names only what it needs and
                  swallows the rest: ``lambda X, **_: X.shape[0] >= X.shape[1]``.
        ensures: Postconditions. Each predicate receives the function result.

    Example:
        @contract(
            requires=[(lambda S, **_: S.shape[0] == S.shape[1], "S must be square")],
            ensures=[lambda out: out.factor.shape[0] == out.factor.shape[1]],
        )
        def cholesky_flagged(S):
            ...
    """
    requires = requires or []
    ensures = ensures or []

    def decorator(func: F) -> F:
        sig = inspect.signature(func)
        info = ContractInfo(
            requires=requires,
            ensures=ensures,
            func_name=func.__name__,
            func_module=func.__module__,
            parameters=list(sig.parameters),
        )
        func._contract_info = info  # type: ignore[attr-defined]

        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            bound = sig.bind(*args, **kwargs)
            bound.apply_defaults()
            _check_requires(info, bound.arguments)
            result = func(*args, **kwargs)
            _check_ensures(info, result)
            return result

        return wrapper  # type: ignore[return-value]

    return decorator


def _split(condition: Condition) -> tuple[Predicate, Optional[str]]:
    if isinstance(condition, tuple):
        return condition[0], condition[1]
    return condition, None


def _check_requires(info: ContractInfo, arguments: dict[str, Any]) -> None:
    for i, condition in enumerate(info.requires):
        predicate, message = _split(condition)
        try:
            ok = predicate(**arguments)
        except (TypeError, ValueError, AttributeError, IndexError) as e:
            raise ContractError(
                f"Precondition {i} raised error for {info.full_name}: {e}",
                operation=info.full_name,
                condition_type="requires",
                condition_index=i,
            ) from e
        if not ok:
            detail = f": {message}" if message else ""
            raise ContractError(
                f"Precondition {i} failed for {info.full_name}{detail}",
                operation=info.full_name,
                condition_type="requires",
                condition_index=i,
            )


def _check_ensures(info: ContractInfo, result: Any) -> None:
    for i, condition in enumerate(info.ensures):
        predicate, message = _split(condition)
        try:
            ok = predicate(result)
        except (TypeError, ValueError, AttributeError, IndexError) as e:
            raise ContractError(
                f"Postcondition {i} raised error for {info.full_name}: {e}",
                operation=info.full_name,
                condition_type="ensures",
                condition_index=i,
            ) from e
        if not ok:
            detail = f": {message}" if message else ""
            raise ContractError(
                f"Postcondition {i} failed for {info.full_name}{detail}",
                operation=info.full_name,
                condition_type="ensures",
                condition_index=i,
            )
