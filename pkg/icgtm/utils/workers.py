import logging
import os
from typing import Optional

from icgtm.errors import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV = "ICGTM_THREADS"


def resolve_workers(threads: Optional[int] = None) -> int:
    """Worker count: explicit value, else ``ICGTM_THREADS``, else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV)
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if threads < 1:
        raise ConfigError(f"thread count must be at least 1, got {threads}")
    return threads
