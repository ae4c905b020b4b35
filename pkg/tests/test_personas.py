import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forumsim.personas import (
    AGE_MAX,
    AGE_MIN,
    BUDGET_DISTRIBUTION,
    INTEREST_CATALOG,
    LEANING_WEIGHTS,
    LEANINGS,
    Persona,
    sample_budget,
    sample_persona,
)


def test_catalog_has_ten_tags():
    assert len(INTEREST_CATALOG) == 10
    assert len(set(INTEREST_CATALOG)) == 10


def test_normalizer_matches_power_sum():
    # independent oracle: sum the ten unnormalized masses
    z = sum(k ** -2.5 for k in range(1, 11))
    assert BUDGET_DISTRIBUTION.normalizer == pytest.approx(z, abs=0)
    assert z == pytest.approx(1.321921, abs=5e-7)


def test_pmf_endpoints():
    z = BUDGET_DISTRIBUTION.normalizer
    assert BUDGET_DISTRIBUTION.pmf(1) == pytest.approx(1 / z)
    assert BUDGET_DISTRIBUTION.pmf(10) == pytest.approx(10 ** -2.5 / z)
    assert BUDGET_DISTRIBUTION.pmf(1) == pytest.approx(0.756474, abs=2e-6)
    assert BUDGET_DISTRIBUTION.pmf(10) == pytest.approx(0.002392, abs=2e-6)
    assert BUDGET_DISTRIBUTION.pmf(0) == 0.0
    assert BUDGET_DISTRIBUTION.pmf(11) == 0.0


def test_pmf_sums_to_one():
    total = sum(BUDGET_DISTRIBUTION.pmf(k) for k in range(1, 11))
    assert abs(total - 1.0) < 1e-12


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_budget_support(seed):
    rng = random.Random(seed)
    assert sample_budget(rng) in range(1, 11)


def test_persona_fields_within_domains(persona_stream):
    for p in persona_stream(seed=5, n=500):
        assert AGE_MIN <= p.age <= AGE_MAX
        assert p.leaning in LEANINGS
        assert 2 <= len(p.interests) <= 5
        assert len(set(p.interests)) == len(p.interests)
        assert set(p.interests) <= set(INTEREST_CATALOG)
        assert 1 <= p.budget <= 10
        assert p.locale == "English (American)"
        assert p.name


def test_persona_stream_deterministic(persona_stream):
    assert persona_stream(seed=123, n=200) == persona_stream(seed=123, n=200)
    assert persona_stream(seed=123, n=200) != persona_stream(seed=124, n=200)


def test_invalid_persona_rejected():
    with pytest.raises(ValueError):
        Persona(
            age=17,
            education="bachelor",
            leaning="AntiElitePopulist",
            interests=("Big Tech", "Artificial Intelligence"),
            toxicity_propensity="No",
            budget=1,
            name="X",
        )
    with pytest.raises(ValueError):
        Persona(
            age=30,
            education="bachelor",
            leaning="AntiElitePopulist",
            interests=("Big Tech",),
            toxicity_propensity="No",
            budget=1,
            name="X",
        )


@settings(deadline=None)
@given(st.integers(min_value=0, max_value=2**16))
def test_budget_sampler_matches_inverse_cdf_oracle(seed):
    """Single draws agree with a from-scratch inverse-CDF evaluation."""
    z = sum(k ** -2.5 for k in range(1, 11))
    cumulative = []
    acc = 0.0
    for k in range(1, 11):
        acc += k ** -2.5 / z
        cumulative.append(acc)
    u = random.Random(seed).random()
    expected = next(k for k, c in zip(range(1, 11), cumulative) if u < c)
    assert sample_budget(random.Random(seed)) == expected


def test_leaning_and_age_marginals_at_scale():
    """10^6 personas: leaning frequencies within +/-0.002, ages uniform."""
    from scipy.stats import chisquare

    rng = random.Random(20240817)
    n = 1_000_000
    leanings = Counter()
    ages = Counter()
    for _ in range(n):
        p = sample_persona(rng)
        leanings[p.leaning] += 1
        ages[p.age] += 1
    for leaning, weight in zip(LEANINGS, LEANING_WEIGHTS):
        assert abs(leanings[leaning] / n - weight) <= 0.002, leaning
    observed = [ages[a] for a in range(AGE_MIN, AGE_MAX + 1)]
    assert len(observed) == 43
    result = chisquare(observed)
    assert result.pvalue > 0.01
