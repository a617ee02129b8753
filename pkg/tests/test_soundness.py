from __future__ import annotations

import pytest

from mutants import MUTANTS
from relsem import corpus
from relsem.oracle.soundness import check_soundness


@pytest.mark.parametrize("mutant", MUTANTS, ids=lambda mu: f"{mu.calculus.__name__}-{mu.program}")
def test_mutant_is_caught(mutant):
    p = corpus.load(mutant.program)
    assert check_soundness(p, dom=7).ok
    r = check_soundness(p, dom=7, calculus=mutant.calculus)
    assert r.violations, f"{mutant.calculus.__name__} not caught on {mutant.program}"


@pytest.mark.parametrize("name", ["abs", "swap", "calls", "nested", "shortcircuit"])
def test_small_programs_are_sound_at_dom_4(name):
    r = check_soundness(corpus.load(name), dom=4)
    assert r.ok, [str(v) for v in r.violations]
