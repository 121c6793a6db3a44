from typing import Callable


def conditional_decorator(dec: Callable, condition: bool) -> Callable[[Callable], Callable]:
    """
    Apply the decorator `dec` to a function only if `condition` is True.

    The condition is evaluated when the decorator is applied, so the CLI can
    decide at runtime whether a command gets profiled.
    """
    def decorator(func: Callable) -> Callable:
        return dec(func) if condition else func

    return decorator
