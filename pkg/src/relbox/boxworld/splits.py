"""Train/test samplers for generalization splits.

Two split families: `longer_solutions` holds out path lengths never seen
in training, `withheld_keylock_pairs` holds out specific (lock, content)
transitions from training solution paths. A withheld pair may still occur
on a training level's distractor branches; only the solution path is
constrained. Test levels plant a withheld pair (or length) explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..rng import Rng, derive_seed
from .config import InfeasibleSplit, LevelConfig
from .levels import Level, generate_level

NO_SPLIT = "none"
LONGER_SOLUTIONS = "longer_solutions"
WITHHELD_PAIRS = "withheld_keylock_pairs"

_TRAIN_REJECTION_BOUND = 1000

Sampler = Callable[[int], Level]


@dataclass(frozen=True)
class SplitSpec:
    kind: str = NO_SPLIT
    lengths: tuple[int, ...] = ()
    pairs: tuple[tuple[int, int], ...] = ()

    @staticmethod
    def none() -> "SplitSpec":
        return SplitSpec()

    @staticmethod
    def longer_solutions(lengths) -> "SplitSpec":
        return SplitSpec(kind=LONGER_SOLUTIONS, lengths=tuple(int(n) for n in lengths))

    @staticmethod
    def withheld_keylock_pairs(pairs) -> "SplitSpec":
        return SplitSpec(
            kind=WITHHELD_PAIRS, pairs=tuple((int(a), int(b)) for a, b in pairs)
        )


def make_split(config: LevelConfig, spec: SplitSpec) -> tuple[Sampler, Sampler]:
    """Build (train_sampler, test_sampler), each a seed -> Level function."""
    config.validate()
    lo, hi = config.solution_length_range
    _, dmax = config.num_distractor_range

    if spec.kind == NO_SPLIT:
        def sampler(seed: int) -> Level:
            return generate_level(config, seed)

        return sampler, sampler

    if spec.kind == LONGER_SOLUTIONS:
        if not spec.lengths:
            raise InfeasibleSplit("longer_solutions needs at least one test length")
        for length in spec.lengths:
            if lo <= length <= hi:
                raise InfeasibleSplit(
                    f"test length {length} falls inside the training range {lo}..{hi}"
                )
            if length < 1:
                raise InfeasibleSplit(f"test length must be >= 1, got {length}")
            if length + dmax * config.distractor_length > config.num_colors:
                raise InfeasibleSplit(
                    f"test length {length} exceeds the color budget "
                    f"({config.num_colors} colors)"
                )

        def train(seed: int) -> Level:
            return generate_level(config, seed)

        def test(seed: int) -> Level:
            rng = Rng(derive_seed(seed, 0x7E57))
            length = spec.lengths[rng.randrange(len(spec.lengths))]
            return generate_level(config, derive_seed(seed, 1), solution_length=length)

        return train, test

    if spec.kind == WITHHELD_PAIRS:
        if not spec.pairs:
            raise InfeasibleSplit("withheld_keylock_pairs needs at least one pair")
        for a, b in spec.pairs:
            if a == b or not (0 <= a < config.num_colors and 0 <= b < config.num_colors):
                raise InfeasibleSplit(f"invalid withheld pair ({a}, {b})")
        if hi < 2:
            raise InfeasibleSplit(
                "withheld pairs need solution_length >= 2 somewhere in the range"
            )
        withheld = set(spec.pairs)

        def train(seed: int) -> Level:
            for attempt in range(_TRAIN_REJECTION_BOUND):
                level = generate_level(config, derive_seed(seed, attempt))
                if not level.graph.path_transitions() & withheld:
                    return level
            raise InfeasibleSplit(
                f"could not draw a training level avoiding {len(withheld)} withheld "
                f"pairs in {_TRAIN_REJECTION_BOUND} attempts"
            )

        def test(seed: int) -> Level:
            rng = Rng(derive_seed(seed, 0x7E57))
            pair = spec.pairs[rng.randrange(len(spec.pairs))]
            length = rng.randint(max(2, lo), hi)
            return generate_level(
                config, derive_seed(seed, 1), solution_length=length, forced_transition=pair
            )

        return train, test

    raise InfeasibleSplit(f"unknown split kind: {spec.kind!r}")
