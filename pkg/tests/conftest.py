import random

import pytest

from forumsim.personas import Persona, sample_persona
from forumsim.platform import Platform


def make_persona(
    name="KatieWest",
    interests=("Big Tech", "Artificial Intelligence"),
    budget=2,
    toxicity="No",
):
    return Persona(
        age=34,
        education="bachelor",
        leaning="AntiElitePopulist",
        interests=tuple(interests),
        toxicity_propensity=toxicity,
        budget=budget,
        name=name,
    )


@pytest.fixture
def persona():
    return make_persona()


@pytest.fixture
def platform():
    return Platform()


@pytest.fixture
def populated(platform):
    """Platform with three agents and a short thread rooted at a post."""
    rng = random.Random(0)
    ids = []
    for name in ("KatieWest", "PamelaKelly", "BrianHayes"):
        ids.append(platform.register_agent(make_persona(name=name), day=0))
    a, b, c = ids
    post = platform.submit_post(a, "Grid storage", "battery economics", None, ("Big Tech",), 0)
    c1 = platform.submit_comment(b, post, "numbers are off", (), 1)
    c2 = platform.submit_comment(a, c1, "which numbers?", (), 2)
    return platform, {"agents": ids, "post": post, "comments": [c1, c2], "rng": rng}


@pytest.fixture
def persona_stream():
    def draw(seed, n):
        rng = random.Random(seed)
        return [sample_persona(rng) for _ in range(n)]

    return draw
