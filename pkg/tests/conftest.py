import sys
from pathlib import Path

import pytest
from hypothesis import settings

# oracles.py is a plain helper module next to the tests, not a package
sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("suite", deadline=None, max_examples=40)
settings.load_profile("suite")

from epplan.cli import TmDescription, build_language_demo  # noqa: E402

# one line per acceptance criterion, echoed after the run so they survive
# pytest's fd-level output capture
acceptance_verdicts: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_verdicts:
        terminalreporter.section("acceptance verdicts")
        for line in acceptance_verdicts:
            terminalreporter.write_line(line)

# the words over {a,b} using both letters, i.e. the complement of a*|b*
TARGET_REGEX = "(a|b)*·(a·b|b·a)·(a|b)*"


@pytest.fixture(scope="session")
def flang():
    """Grow-a-language instance: generators a* and b*, target the mixed words."""
    return build_language_demo(["a*", "b*"], TARGET_REGEX)


@pytest.fixture(scope="session")
def flang_concat():
    """Same with the word ab as a third generator and concatenation enabled."""
    return build_language_demo(["a*", "b*", "a·b"], TARGET_REGEX + "·a·b",
                               allow_concat=True)


@pytest.fixture(scope="session")
def closure():
    import oracles
    return oracles.close_language_algebra()


@pytest.fixture(scope="session")
def one_step_tm():
    """Accepts exactly the inputs starting with a, in a single move."""
    return TmDescription(
        states=("q0", "qacc"),
        input=("a",),
        tape=("a", "⊔"),
        blank="⊔",
        delta={("q0", "a"): ("qacc", "a", "R")},
        initial="q0",
        accepting=frozenset({"qacc"}),
    )


@pytest.fixture(scope="session")
def scanner_tm():
    """Walks right over its input and accepts at the first blank."""
    return TmDescription(
        states=("q0", "q1", "qacc"),
        input=("a",),
        tape=("a", "⊔"),
        blank="⊔",
        delta={("q0", "a"): ("q1", "a", "R"),
               ("q1", "a"): ("q0", "a", "R"),
               ("q0", "⊔"): ("qacc", "⊔", "R"),
               ("q1", "⊔"): ("qacc", "⊔", "R")},
        initial="q0",
        accepting=frozenset({"qacc"}),
    )


@pytest.fixture(scope="session")
def dead_tm():
    """The accepting state exists but no transition ever reaches it."""
    return TmDescription(
        states=("q0", "q1", "qacc"),
        input=("a",),
        tape=("a", "⊔"),
        blank="⊔",
        delta={("q0", "a"): ("q1", "a", "R"),
               ("q1", "a"): ("q0", "a", "R"),
               ("q0", "⊔"): ("q1", "⊔", "R"),
               ("q1", "⊔"): ("q0", "⊔", "R")},
        initial="q0",
        accepting=frozenset({"qacc"}),
    )
