"""Level configuration and environment error types."""

from __future__ import annotations

from dataclasses import dataclass


class InvalidConfig(ValueError):
    """Level configuration violates an invariant."""


class PlacementExhausted(RuntimeError):
    """Object placement retries exceeded the bound; config too dense."""


class SteppedAfterDone(RuntimeError):
    """step() called on a terminated episode."""


class InfeasibleSplit(ValueError):
    """Split spec cannot be satisfied by the generator."""


FORWARD = "forward"
BACKWARD = "backward"
RGB = "rgb"
ONE_HOT = "one_hot"


@dataclass(frozen=True)
class LevelConfig:
    """User-controlled knobs for procedural level generation.

    `solution_length_range` and `num_distractor_range` are inclusive.
    `num_colors` must cover the worst case: the longest solution path plus
    one fresh color per distractor box.
    """

    room_size: int = 12
    solution_length_range: tuple[int, int] = (1, 4)
    num_distractor_range: tuple[int, int] = (0, 4)
    distractor_length: int = 1
    branching_mode: str = FORWARD
    num_colors: int = 20
    max_steps: int = 120
    encoding: str = RGB

    def validate(self) -> None:
        lo, hi = self.solution_length_range
        dlo, dhi = self.num_distractor_range
        if self.room_size < 6:
            raise InvalidConfig(f"room_size must be >= 6, got {self.room_size}")
        if lo < 1 or hi < lo:
            raise InvalidConfig(f"bad solution_length_range {self.solution_length_range}")
        if dlo < 0 or dhi < dlo:
            raise InvalidConfig(f"bad num_distractor_range {self.num_distractor_range}")
        if self.distractor_length < 1:
            raise InvalidConfig("distractor_length must be >= 1")
        if self.branching_mode not in (FORWARD, BACKWARD):
            raise InvalidConfig(f"unknown branching_mode {self.branching_mode!r}")
        if self.encoding not in (RGB, ONE_HOT):
            raise InvalidConfig(f"unknown encoding {self.encoding!r}")
        if self.max_steps < 1:
            raise InvalidConfig("max_steps must be >= 1")
        worst = hi + dhi * self.distractor_length
        if self.num_colors < worst:
            raise InvalidConfig(
                f"num_colors={self.num_colors} < solution length + distractor boxes ({worst})"
            )
        if self.encoding == RGB and self.num_colors > 20:
            raise InvalidConfig("rgb palette has 20 entries; use one_hot for more colors")

    @property
    def obs_channels(self) -> int:
        """Channel count of the rendered observation."""
        if self.encoding == RGB:
            return 3
        return self.num_colors + 3  # colors + agent + gem + empty
