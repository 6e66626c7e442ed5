import pytest

# 3 samples over 4 words, scored by hand:
# row 0: T={0,1} P={0}   -> precision 1,   recall 1/2, F 2/3
# row 1: T={2}   P={2,3} -> precision 1/2, recall 1,   F 2/3
# row 2: T={1,3} P={}    -> precision 0,   recall 0,   F 0
# per word F: w0 1, w1 0, w2 1, w3 0
HAND_TRUTH = [(0, 1), (2,), (1, 3)]
HAND_PRED = [(0,), (2, 3), ()]
HAND_SCORES = {
    "sample_f": 100 * 4 / 9,
    "sample_precision": 50.0,
    "sample_recall": 50.0,
    "macro_f": 50.0,
    "per_word_f": [100.0, 0.0, 100.0, 0.0],
}


@pytest.fixture
def hand_fixture():
    return HAND_TRUTH, HAND_PRED, HAND_SCORES


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
