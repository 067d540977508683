from __future__ import annotations

from pathlib import Path

import pytest

from demoselect import (
    BudgetTooSmallError,
    ConfigError,
    default_token_counter,
    format_prompt,
    order_demonstrations,
    truncate_prompt,
)

from geo_pool import TEST_UTTERANCE, demos_for

GOLDEN_DIR = Path(__file__).parent / "golden"


def test_ascending_order_puts_best_last():
    items = [("a", 0.9), ("b", 0.1), ("c", 0.5)]
    assert order_demonstrations(items) == [("b", 0.1), ("c", 0.5), ("a", 0.9)]


def test_single_item_order():
    assert order_demonstrations([("a", 0.3)]) == [("a", 0.3)]


def test_shuffled_order_is_seed_deterministic():
    items = [(f"d{i}", float(i)) for i in range(8)]
    first = order_demonstrations(items, mode="shuffled", seed=4)
    second = order_demonstrations(items, mode="shuffled", seed=4)
    other = order_demonstrations(items, mode="shuffled", seed=5)
    assert first == second
    assert sorted(first) == sorted(items)
    assert first != other


def test_unknown_order_mode_rejected():
    with pytest.raises(ConfigError):
        order_demonstrations([], mode="descending")


@pytest.mark.parametrize("method", ["top_k", "dpp", "cover_ls"])
def test_prompt_rendering_matches_golden_bytes(method):
    prompt = format_prompt(demos_for(method), TEST_UTTERANCE)
    golden = (GOLDEN_DIR / f"prompt_{method}.txt").read_bytes()
    assert prompt.text.encode("utf-8") == golden


def test_prompt_ends_with_open_target():
    prompt = format_prompt(demos_for("top_k"), TEST_UTTERANCE)
    assert prompt.text.endswith(f"source: {TEST_UTTERANCE}\ntarget:")
    assert prompt.demo_ids == ["g1", "g2", "g3", "g4"]


def test_prompt_without_demos_is_just_test_block():
    prompt = format_prompt([], "how many rivers")
    assert prompt.text == "source: how many rivers\ntarget:"
    assert prompt.demo_ids == []


def test_programs_only_variant_drops_utterances():
    demos = [("d1", "an utterance", "f (a)"), ("d2", "another", "g (b)")]
    prompt = format_prompt(demos, "test words", include_utterances=False)
    assert prompt.text == (
        "target: f (a)\ntarget: g (b)\nsource: test words\ntarget:"
    )


def test_truncation_noop_when_within_budget():
    prompt = format_prompt(demos_for("top_k"), TEST_UTTERANCE)
    kept = truncate_prompt(prompt, budget=10_000)
    assert kept.text == prompt.text
    assert kept.truncated_count == 0


def test_truncation_drops_front_demo_first():
    demos = [
        ("d1", "one two three", "f (a)"),
        ("d2", "four five six", "g (b)"),
    ]
    prompt = format_prompt(demos, "seven eight")
    # Blocks weigh 7 words each, the test block 4; the full prompt estimates
    # ceil(18 * 1.3) = 24 and one dropped block leaves ceil(11 * 1.3) = 15.
    full = default_token_counter(prompt.text)
    assert full == 24
    truncated = truncate_prompt(prompt, budget=15)
    assert truncated.demo_ids == ["d2"]
    assert truncated.truncated_count == 1
    assert truncated.text == "source: four five six\ntarget: g (b)\nsource: seven eight\ntarget:"


def test_truncation_budget_below_test_block_errors():
    prompt = format_prompt([], "a very long test utterance with many words here")
    with pytest.raises(BudgetTooSmallError):
        truncate_prompt(prompt, budget=2)


def test_truncation_preserves_order_of_survivors():
    demos = [(f"d{i}", f"words number {i}", f"f{i} (a)") for i in range(5)]
    prompt = format_prompt(demos, "test")
    truncated = truncate_prompt(prompt, budget=default_token_counter(prompt.text) - 1)
    assert truncated.demo_ids == [d for d, _, _ in demos][5 - len(truncated.demo_ids):]
