"""Persona sampling for the agent population.

Every agent is described by a small attribute bundle (age, education,
political leaning, interests, toxicity propensity, per-activation action
budget, display name) that conditions all of its generated text. Budgets
follow a truncated Zipf law so participation is heavy-tailed; leanings use
fixed right-of-center weights; everything else is uniform over its domain.

All sampling is driven by an explicit ``random.Random`` so a fixed seed
yields a bitwise-identical persona stream.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

# The fixed 10-tag interest catalog. Order matters: sampling and eviction
# tests rely on this exact tuple.
INTEREST_CATALOG = (
    "Social Media & Online Platforms",
    "Internet Policy & Regulation",
    "Artificial Intelligence",
    "Electric Vehicles & Transportation",
    "Software Development",
    "Clean Energy & Sustainability",
    "Cybersecurity & Privacy",
    "Big Tech",
    "Space Technology",
    "Open Source Projects",
)

LEANINGS = (
    "ReligiousPatriot",
    "ProBusinessEstablishment",
    "AntiElitePopulist",
    "SociallyModerateRight",
)
LEANING_WEIGHTS = (0.37, 0.11, 0.43, 0.09)

LEANING_LABELS = {
    "ReligiousPatriot": "Religious-Patriot Conservative",
    "ProBusinessEstablishment": "Pro-Business Establishment Right",
    "AntiElitePopulist": "Anti-Elite Populist Right",
    "SociallyModerateRight": "Socially Moderate Right",
}

EDUCATION_LEVELS = ("high school", "bachelor", "master", "phd")

TOXICITY_LEVELS = ("Absolutely No", "No", "Moderately", "Extremely")

AGE_MIN, AGE_MAX = 18, 60
INTERESTS_MIN, INTERESTS_MAX = 2, 5
LOCALE = "English (American)"

# Display names are built from fixed word lists; the platform de-duplicates
# on registration.
_FIRST_NAMES = (
    "Katie", "Pamela", "Brian", "Dennis", "Carol", "Travis", "Megan", "Roy",
    "Glenn", "Dana", "Victor", "Wanda", "Curtis", "Julie", "Marcus", "Tina",
    "Earl", "Shannon", "Pete", "Lori", "Randy", "Gail", "Walt", "Brenda",
    "Hank", "Cindy", "Dale", "Joanne", "Ross", "Vera", "Clint", "Marsha",
    "Ned", "Patsy", "Gus", "Darlene", "Monte", "Faye", "Burt", "Irene",
)
_LAST_NAMES = (
    "West", "Kelly", "Hayes", "Monroe", "Dalton", "Pierce", "Vaughn", "Ford",
    "Tate", "Sloan", "Burke", "Crane", "Doyle", "Ellis", "Finch", "Grady",
    "Holt", "Irwin", "Joyce", "Keller", "Lane", "Mercer", "Nash", "Olsen",
    "Page", "Quinn", "Reeves", "Stone", "Thorne", "Upton", "Vance", "Walsh",
    "York", "Zane", "Barrett", "Cole", "Decker", "Eaton", "Frost", "Gibbs",
)


@dataclass(frozen=True)
class BudgetDistribution:
    """Truncated Zipf law on 1..10: Pr(B=k) = k^(-s) / Z."""

    exponent: float = 2.5
    support: tuple[int, ...] = tuple(range(1, 11))
    normalizer: float = field(init=False, default=0.0)
    _cumulative: tuple[float, ...] = field(init=False, default=())

    def __post_init__(self):
        masses = [k ** -self.exponent for k in self.support]
        z = sum(masses)
        object.__setattr__(self, "normalizer", z)
        cum, acc = [], 0.0
        for m in masses:
            acc += m / z
            cum.append(acc)
        object.__setattr__(self, "_cumulative", tuple(cum))

    def pmf(self, k: int) -> float:
        if k not in self.support:
            return 0.0
        return k ** -self.exponent / self.normalizer

    def sample(self, rng) -> int:
        return self.support[bisect_right(self._cumulative, rng.random())]


BUDGET_DISTRIBUTION = BudgetDistribution()


@dataclass(frozen=True)
class Persona:
    age: int
    education: str
    leaning: str
    interests: tuple[str, ...]
    toxicity_propensity: str
    budget: int
    name: str
    locale: str = LOCALE

    def __post_init__(self):
        if not (AGE_MIN <= self.age <= AGE_MAX):
            raise ValueError(f"age {self.age} outside [{AGE_MIN},{AGE_MAX}]")
        if self.education not in EDUCATION_LEVELS:
            raise ValueError(f"unknown education {self.education!r}")
        if self.leaning not in LEANINGS:
            raise ValueError(f"unknown leaning {self.leaning!r}")
        if self.toxicity_propensity not in TOXICITY_LEVELS:
            raise ValueError(f"unknown toxicity level {self.toxicity_propensity!r}")
        if not (1 <= self.budget <= 10):
            raise ValueError(f"budget {self.budget} outside [1,10]")
        if len(set(self.interests)) != len(self.interests):
            raise ValueError("interests must be distinct")
        if not (INTERESTS_MIN <= len(self.interests) <= INTERESTS_MAX):
            raise ValueError("interest count outside [2,5]")
        unknown = set(self.interests) - set(INTEREST_CATALOG)
        if unknown:
            raise ValueError(f"interests not in catalog: {unknown}")


def sample_budget(rng) -> int:
    """Draw an action budget from the truncated Zipf(s=2.5) law on 1..10."""
    return BUDGET_DISTRIBUTION.sample(rng)


def _sample_leaning(rng) -> str:
    x = rng.random()
    acc = 0.0
    for leaning, w in zip(LEANINGS, LEANING_WEIGHTS):
        acc += w
        if x < acc:
            return leaning
    return LEANINGS[-1]


def sample_persona(rng) -> Persona:
    """Sample one persona.

    Draw order is part of the determinism contract: leaning, age, education,
    interest count, interests, toxicity, budget, name.
    """
    leaning = _sample_leaning(rng)
    age = rng.randint(AGE_MIN, AGE_MAX)
    education = rng.choice(EDUCATION_LEVELS)
    n_interests = rng.randint(INTERESTS_MIN, INTERESTS_MAX)
    interests = tuple(rng.sample(INTEREST_CATALOG, n_interests))
    toxicity = rng.choice(TOXICITY_LEVELS)
    budget = sample_budget(rng)
    name = rng.choice(_FIRST_NAMES) + rng.choice(_LAST_NAMES)
    return Persona(
        age=age,
        education=education,
        leaning=leaning,
        interests=interests,
        toxicity_propensity=toxicity,
        budget=budget,
        name=name,
    )
