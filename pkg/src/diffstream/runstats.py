"""Run statistics and deterministic allocation accounting.

Peak memory is tracked by explicit accounting of the frame-data arrays an
engine allocates, not by sampling process memory: the number is then an
exact function of the configuration, which is what makes the
constant-memory property assertable as an equality between runs of
different lengths.
"""

from dataclasses import dataclass, field


@dataclass
class RunStats:
    """Outcome of one generation run."""

    frames: int
    denoiser_calls: int
    peak_bytes: int
    wall_ms: float
    boundaries: tuple[int, ...] = ()

    CSV_HEADER = "frames,calls,peak_bytes,wall_ms"

    def csv_row(self) -> str:
        return f"{self.frames},{self.denoiser_calls},{self.peak_bytes},{self.wall_ms!r}"


def write_runstats_csv(stats: RunStats, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(RunStats.CSV_HEADER + "\n")
        fh.write(stats.csv_row() + "\n")


class AllocationMeter:
    """Tracks held allocations plus per-step transient peaks, in bytes."""

    def __init__(self):
        self._held: dict[str, int] = {}
        self.peak = 0

    @property
    def held_bytes(self) -> int:
        return sum(self._held.values())

    def hold(self, name: str, nbytes: int) -> None:
        """Register a long-lived allocation under `name` (replaces a previous one)."""
        self._held[name] = int(nbytes)
        self.peak = max(self.peak, self.held_bytes)

    def release(self, name: str) -> None:
        self._held.pop(name, None)

    def pulse(self, nbytes: int) -> None:
        """Record a transient allocation that lives alongside the held set."""
        self.peak = max(self.peak, self.held_bytes + int(nbytes))
