"""Generalization splits: withheld lengths and withheld key-lock pairs."""

import pytest

from relbox.boxworld import InfeasibleSplit, LevelConfig, SplitSpec, level_to_json
from relbox.boxworld.splits import make_split

CFG = LevelConfig()  # train lengths 1..4


def test_empty_spec_train_and_test_agree():
    train, test = make_split(CFG, SplitSpec.none())
    for seed in range(20):
        assert level_to_json(train(seed)) == level_to_json(test(seed))


def test_longer_solutions_test_levels_use_held_out_lengths():
    train, test = make_split(CFG, SplitSpec.longer_solutions([6, 8, 10]))
    seen = set()
    for seed in range(60):
        length = test(seed).graph.solution_length
        assert length in {6, 8, 10}
        seen.add(length)
        assert 1 <= train(seed).graph.solution_length <= 4
    assert seen == {6, 8, 10}


def test_withheld_pair_absent_from_training_solution_paths():
    pair = (0, 1)
    train, test = make_split(CFG, SplitSpec.withheld_keylock_pairs([pair]))
    for seed in range(1000):
        assert pair not in train(seed).graph.path_transitions()


def test_withheld_pair_present_in_every_test_level():
    pairs = ((0, 1), (5, 9))
    train, test = make_split(CFG, SplitSpec.withheld_keylock_pairs(pairs))
    seen = set()
    for seed in range(40):
        level = test(seed)
        hit = set(pairs) & level.graph.path_transitions()
        assert hit, "test level missing the withheld transition"
        seen |= hit
        assert level.graph.solution_length >= 2
    assert seen == set(pairs)


def test_withheld_pair_may_appear_on_distractors():
    # the constraint is about solution paths only; distractor branches in
    # forward mode reuse path colors freely
    train, _ = make_split(CFG, SplitSpec.withheld_keylock_pairs([(0, 1)]))
    level = train(0)
    assert (0, 1) not in level.graph.path_transitions()


def test_split_samplers_are_deterministic():
    for spec in (
        SplitSpec.none(),
        SplitSpec.longer_solutions([6]),
        SplitSpec.withheld_keylock_pairs([(2, 3)]),
    ):
        train_a, test_a = make_split(CFG, spec)
        train_b, test_b = make_split(CFG, spec)
        for seed in (0, 7):
            assert level_to_json(train_a(seed)) == level_to_json(train_b(seed))
            assert level_to_json(test_a(seed)) == level_to_json(test_b(seed))


def test_longer_solutions_rejects_training_range_overlap():
    with pytest.raises(InfeasibleSplit):
        make_split(CFG, SplitSpec.longer_solutions([3, 8]))


def test_longer_solutions_rejects_color_budget_violation():
    with pytest.raises(InfeasibleSplit):
        make_split(CFG, SplitSpec.longer_solutions([17]))  # 17 + 4 distractors > 20


def test_longer_solutions_rejects_empty():
    with pytest.raises(InfeasibleSplit):
        make_split(CFG, SplitSpec(kind="longer_solutions"))


def test_withheld_pairs_rejects_bad_pairs():
    with pytest.raises(InfeasibleSplit):
        make_split(CFG, SplitSpec.withheld_keylock_pairs([(3, 3)]))
    with pytest.raises(InfeasibleSplit):
        make_split(CFG, SplitSpec.withheld_keylock_pairs([(0, 99)]))
    with pytest.raises(InfeasibleSplit):
        make_split(CFG, SplitSpec(kind="withheld_keylock_pairs"))


def test_withheld_pairs_need_length_two_somewhere():
    short = LevelConfig(solution_length_range=(1, 1), num_distractor_range=(0, 2))
    with pytest.raises(InfeasibleSplit):
        make_split(short, SplitSpec.withheld_keylock_pairs([(0, 1)]))


def test_unknown_split_kind_rejected():
    with pytest.raises(InfeasibleSplit):
        make_split(CFG, SplitSpec(kind="sideways"))
