import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from hypa import PathCorpus

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).resolve().parent.parent / "data"

TOY_COUNTS = {("A", "X", "C"): 30, ("B", "X", "C"): 105, ("B", "X", "D"): 100}


@pytest.fixture
def toy_corpus() -> PathCorpus:
    return PathCorpus.from_sequences([(list(p), c) for p, c in TOY_COUNTS.items()])


@pytest.fixture
def toy_path() -> Path:
    return DATA / "toy.ngram"
