import cProfile
import inspect
import io
import logging
import pstats
from functools import wraps

PROFILE_FILE = "profile_stats.prof"


def _report(pr: cProfile.Profile, output_file: str | None) -> None:
    """
    Log the 20 most expensive calls and optionally dump stats for snakeviz.
    """
    s = io.StringIO()
    ps = pstats.Stats(pr, stream=s).sort_stats("cumulative")
    ps.print_stats(20)
    logging.info(f"Profile summary:\n{s.getvalue()}")
    if output_file:
        ps.dump_stats(output_file)
        logging.info(f"Profile data saved to {output_file}")


def profile(func=None, output_file: str | None = None):
    """
    cProfile a sync or async callable.

    Usable bare (`@profile`) or with arguments (`@profile(output_file=...)`).
    """
    def decorator(f):
        if inspect.iscoroutinefunction(f):
            @wraps(f)
            async def async_wrapper(*args, **kwargs):
                pr = cProfile.Profile()
                pr.enable()
                try:
                    return await f(*args, **kwargs)
                finally:
                    pr.disable()
                    _report(pr, output_file)
            return async_wrapper

        @wraps(f)
        def sync_wrapper(*args, **kwargs):
            pr = cProfile.Profile()
            pr.enable()
            try:
                return f(*args, **kwargs)
            finally:
                pr.disable()
                _report(pr, output_file)
        return sync_wrapper

    if func is None:
        return decorator
    return decorator(func)
