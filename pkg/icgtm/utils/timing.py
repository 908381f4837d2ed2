import time
from contextlib import contextmanager
from typing import Dict, Iterator, List, Tuple


class StageTimer:
    """Wall-clock time per named pipeline stage, accumulated across passes."""

    def __init__(self):
        self._order: List[str] = []
        self._seconds: Dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            if name not in self._seconds:
                self._order.append(name)
                self._seconds[name] = 0.0
            self._seconds[name] += time.perf_counter() - start

    def items(self) -> List[Tuple[str, float]]:
        return [(name, self._seconds[name]) for name in self._order]

    @property
    def total(self) -> float:
        return sum(self._seconds.values())

    def report(self) -> str:
        lines = [f"  {name:<12} {seconds * 1000:9.1f} ms" for name, seconds in self.items()]
        lines.append(f"  {'total':<12} {self.total * 1000:9.1f} ms")
        return "\n".join(lines)
