from concurrent.futures import Executor, Future
from typing import Any, Callable


class InlineExecutor(Executor):
    """
    Runs submitted work immediately in the calling thread.

    Used when profiling (cProfile only sees the current thread) and wherever a
    sweep should stay in-process.
    """
    def submit(self, fn: Callable[..., Any], /, *args: Any, **kwargs: Any) -> Future:
        future: Future = Future()
        try:
            future.set_result(fn(*args, **kwargs))
        except BaseException as e:
            future.set_exception(e)
        return future
