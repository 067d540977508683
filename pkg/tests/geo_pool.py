"""A small geography question pool shared by prompt-format tests.

The pool rows mirror published example prompts; the per-method demo id
sequences below record which four demonstrations each selection method
showed, already in rendered (ascending similarity) order.
"""

from __future__ import annotations

from demoselect import make_example

TEST_UTTERANCE = "through which states does the longest river in texas run"
TEST_GOLD = "answer (state (traverse_1 (longest (river (loc_2 (stateid (string)))))))"

POOL_ROWS = [
    ("g1", "which states does the mississippi river run through",
     "answer (state (traverse_1 (river (riverid (string)))))"),
    ("g2", "which states does the colorado river run through",
     "answer (state (traverse_1 (river (riverid (string)))))"),
    ("g3", "which states does the missouri river run through",
     "answer (state (traverse_1 (river (riverid (string)))))"),
    ("g4", "which states does the longest river run through",
     "answer (state (traverse_1 (longest (river (all)))))"),
    ("g5", "what states does the shortest river run through",
     "answer (state (traverse_1 (shortest (river (all)))))"),
    ("g6", "which states does the mississippi run through",
     "answer (state (traverse_1 (riverid (string))))"),
    ("g7", "what state borders the least states excluding alaska and excluding hawaii",
     "answer (fewest (state (next_to_2 (exclude (exclude (state (all), "
     "stateid (string)), stateid (string))))))"),
    ("g8", "what is the longest river in texas",
     "answer (longest (river (loc_2 (stateid (string)))))"),
]

DEMO_IDS = {
    "top_k": ["g1", "g2", "g3", "g4"],
    "dpp": ["g5", "g6", "g3", "g4"],
    "cover_ls": ["g7", "g8", "g3", "g4"],
}


def geo_pool():
    return {row[0]: make_example(*row) for row in POOL_ROWS}


def demos_for(method: str) -> list[tuple[str, str, str]]:
    pool = geo_pool()
    return [
        (pool[i].id, pool[i].utterance, pool[i].program) for i in DEMO_IDS[method]
    ]
