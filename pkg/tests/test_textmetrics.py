import math
import random
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forumsim.textmetrics import (
    Chain,
    FileEmbeddingProvider,
    INTERPERSONAL,
    INTRAPERSONAL,
    KernelParams,
    TokenEmbeddings,
    convergence_entropy,
    entropy_by_lag,
    enumerate_pairs,
    extract_chains,
    nearest_neighbor_similarity,
    normalize_text,
    score_pairs,
)

SIGMA = 0.3


def oracle_contribution(m, sigma=SIGMA):
    """Direct Normal-pdf evaluation at 1+m, center 1."""
    pdf = math.exp(-((1 + m - 1.0) ** 2) / (2 * sigma**2)) / (sigma * math.sqrt(2 * math.pi))
    ell = math.log(pdf)
    return -pdf * ell


def path_nodes(speakers):
    """Linear reply path with the given speaker sequence."""
    return [(i, None if i == 0 else i - 1, s) for i, s in enumerate(speakers)]


def brute_force_chains(speakers):
    """Independent segmentation oracle: at each scan position take the
    largest window that is strictly alternating with exactly two speakers
    (tested from scratch, largest candidate first), emit it when length
    >= 3, and restart after it."""

    def valid(lo, hi):
        seg = speakers[lo : hi + 1]
        if len(set(seg)) != 2:
            return False
        return all(a != b for a, b in zip(seg, seg[1:]))

    out = []
    start = 0
    n = len(speakers)
    while start < n:
        end = start
        for candidate in range(n - 1, start, -1):
            if valid(start, candidate):
                end = candidate
                break
        if end - start + 1 >= 3:
            out.append(tuple(range(start, end + 1)))
        start = end + 1
    return out


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------


def test_chain_ababc():
    chains = extract_chains(path_nodes(["A", "B", "A", "B", "C"]))
    assert len(chains) == 1
    assert chains[0].items == (0, 1, 2, 3)
    assert chains[0].speakers == ("A", "B", "A", "B")


def test_chain_abaca():
    chains = extract_chains(path_nodes(["A", "B", "A", "C", "A"]))
    assert len(chains) == 1
    assert chains[0].items == (0, 1, 2)


def test_chain_aab_rejected():
    assert extract_chains(path_nodes(["A", "A", "B"])) == []


def test_chain_long_tail_after_break():
    chains = extract_chains(path_nodes(["A", "B", "A", "C", "A", "C", "A"]))
    assert [c.items for c in chains] == [(0, 1, 2), (3, 4, 5, 6)]


def test_chain_dedup_on_shared_prefix():
    # two leaves branch off after an alternating prefix [A,B,A]
    nodes = [
        (0, None, "A"),
        (1, 0, "B"),
        (2, 1, "A"),
        (3, 2, "C"),
        (4, 2, "D"),
    ]
    chains = extract_chains(nodes)
    assert [c.items for c in chains] == [(0, 1, 2)]


def test_chain_validation():
    with pytest.raises(ValueError):
        Chain(chain_id=0, items=(0, 1), speakers=("A", "B"))
    with pytest.raises(ValueError):
        Chain(chain_id=0, items=(0, 1, 2), speakers=("A", "A", "B"))
    with pytest.raises(ValueError):
        Chain(chain_id=0, items=(0, 1, 2), speakers=("A", "B", "C"))


def test_chains_match_brute_force_on_random_trees():
    rng = random.Random(2024)
    for trial in range(200):
        n = rng.randint(1, 30)
        speakers = [rng.choice("ABCD") for _ in range(n)]
        parents = [None] + [rng.randrange(i) for i in range(1, n)]
        nodes = [(i, parents[i], speakers[i]) for i in range(n)]
        got = sorted(c.items for c in extract_chains(nodes))
        # oracle: enumerate all root-to-leaf paths, segment each, dedup
        children = {}
        for i, p in enumerate(parents):
            children.setdefault(p, []).append(i)
        want = set()
        stack = [(0, [0])] if n else []
        while stack:
            node, path = stack.pop()
            kids = children.get(node, [])
            if not kids:
                seq = [speakers[i] for i in path]
                for window in brute_force_chains(seq):
                    want.add(tuple(path[k] for k in window))
                continue
            for kid in kids:
                stack.append((kid, path + [kid]))
        assert got == sorted(want), (trial, speakers, parents)


# ---------------------------------------------------------------------------
# pairs
# ---------------------------------------------------------------------------


def _chain(length):
    speakers = tuple("AB"[i % 2] for i in range(length))
    return Chain(chain_id=0, items=tuple(range(length)), speakers=speakers)


def test_pairs_length_three():
    pairs = enumerate_pairs(_chain(3))
    assert len(pairs) == 3
    assert sorted(p.lag for p in pairs) == [1, 1, 2]


def test_pairs_length_four():
    assert len(enumerate_pairs(_chain(4))) == 6


def test_pairs_lag_cap():
    pairs = enumerate_pairs(_chain(13))
    assert all(p.lag <= 10 for p in pairs)
    assert not any(p.i == 0 and p.j == 12 for p in pairs)


@given(st.integers(min_value=3, max_value=40))
def test_pair_count_combinatorial_oracle(length):
    expected = sum(1 for i in range(length) for j in range(i + 1, length) if j - i <= 10)
    assert len(enumerate_pairs(_chain(length))) == expected


@given(st.integers(min_value=3, max_value=25))
def test_pair_parity_rule(length):
    for pair in enumerate_pairs(_chain(length)):
        expected = INTERPERSONAL if pair.lag % 2 else INTRAPERSONAL
        assert pair.pair_type == expected


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


def _basis(i, dim=8):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


def test_entropy_all_matched_tokens():
    x = TokenEmbeddings(np.stack([_basis(i % 4) for i in range(10)]))
    h = convergence_entropy(x, TokenEmbeddings(np.stack([_basis(i) for i in range(4)])))
    assert h == pytest.approx(10 * oracle_contribution(1.0), abs=1e-9)
    assert h == pytest.approx(0.27095381, abs=1e-6)


def test_entropy_all_orthogonal_tokens():
    x = TokenEmbeddings(np.stack([_basis(i) for i in range(4)]))
    y = TokenEmbeddings(np.stack([_basis(i + 4) for i in range(4)]))
    h = convergence_entropy(x, y)
    assert h == pytest.approx(4 * oracle_contribution(0.0), abs=1e-9)
    assert h == pytest.approx(4 * -0.37904074, abs=1e-6)


def test_entropy_single_identical_token():
    x = TokenEmbeddings(_basis(0)[None, :])
    y = TokenEmbeddings(np.stack([_basis(0), _basis(1)]))
    assert convergence_entropy(x, y) == pytest.approx(oracle_contribution(1.0), abs=1e-9)
    assert convergence_entropy(x, y) == pytest.approx(0.02709538, abs=1e-6)


def test_entropy_contribution_strictly_decreasing_on_grid():
    grid = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    values = [oracle_contribution(m) for m in grid]
    assert all(a > b for a, b in zip(values, values[1:]))
    # implementation agrees pointwise: single-token turns with cosine m
    for m, want in zip(grid, values):
        x = np.array([[1.0, 0.0]])
        y = np.array([[m, math.sqrt(1 - m * m)]])
        got = convergence_entropy(TokenEmbeddings(x), TokenEmbeddings(y))
        assert got == pytest.approx(want, abs=1e-9)


def test_entropy_stronger_alignment_lower_entropy():
    # all-matched H is strictly below the moderate-similarity H at equal T
    t = 10
    matched = t * oracle_contribution(1.0)
    moderate = t * oracle_contribution(0.7)
    assert matched < moderate


def test_entropy_permutation_invariant():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(7, 16))
    y = rng.normal(size=(9, 16))
    h = convergence_entropy(TokenEmbeddings(x), TokenEmbeddings(y))
    perm_x = x[rng.permutation(7)]
    perm_y = y[rng.permutation(9)]
    assert convergence_entropy(TokenEmbeddings(perm_x), TokenEmbeddings(perm_y)) == pytest.approx(h)


def test_entropy_zero_norm_token_skipped():
    x = np.vstack([_basis(0), np.zeros(8)])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        h = convergence_entropy(TokenEmbeddings(x), TokenEmbeddings(_basis(0)[None, :]))
    assert any("zero-norm" in str(w.message) for w in caught)
    assert h == pytest.approx(oracle_contribution(1.0), abs=1e-9)


def test_token_embedding_validation():
    with pytest.raises(ValueError):
        TokenEmbeddings(np.zeros((0, 4)))
    with pytest.raises(ValueError):
        TokenEmbeddings(np.zeros((257, 4)))
    with pytest.raises(ValueError):
        TokenEmbeddings(np.full((1, 4), np.nan))
    with pytest.raises(ValueError):
        KernelParams(sigma=0.0)


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def test_entropy_by_lag_single_pair():
    chain = _chain(3)
    pairs = enumerate_pairs(chain)
    embeddings = {i: TokenEmbeddings(_basis(i % 3)[None, :]) for i in range(3)}
    scored = score_pairs([chain], pairs[:1], embeddings)
    stats = entropy_by_lag(scored)
    assert stats["overall"]["count"] == 1
    assert stats["overall"]["mean"] == scored[0].entropy
    assert stats["by_lag"][1]["median"] == scored[0].entropy


def test_entropy_by_lag_fixture_means():
    chain = _chain(4)
    pairs = enumerate_pairs(chain)
    # identical embeddings: every pair scores the matched-token value
    emb = {i: TokenEmbeddings(_basis(0)[None, :]) for i in range(4)}
    scored = score_pairs([chain], pairs, emb)
    stats = entropy_by_lag(scored)
    matched = oracle_contribution(1.0)
    assert stats["by_lag"][1]["count"] == 3
    assert stats["by_lag"][1]["mean"] == pytest.approx(matched)
    assert stats["by_type"][INTERPERSONAL]["count"] == 4  # lags 1 and 3
    assert stats["by_type"][INTRAPERSONAL]["count"] == 2  # lag 2
    assert stats["by_type"][INTRAPERSONAL]["mean"] == pytest.approx(matched)


# ---------------------------------------------------------------------------
# nearest neighbor
# ---------------------------------------------------------------------------


def test_nn_self_retrieval():
    rng = np.random.default_rng(0)
    vectors = rng.normal(size=(12, 6))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    stats = nearest_neighbor_similarity(vectors, vectors)
    assert stats["mean"] == pytest.approx(1.0)
    assert stats["share_above_060"] == 1.0
    assert stats["share_above_080"] == 1.0


def test_nn_orthogonal_sets():
    queries = np.eye(4)[:2]
    references = np.eye(4)[2:]
    stats = nearest_neighbor_similarity(queries, references)
    assert stats["mean"] == 0.0
    assert stats["share_above_060"] == 0.0


def test_nn_empty_rejected():
    with pytest.raises(ValueError):
        nearest_neighbor_similarity(np.zeros((0, 3)), np.eye(3))


# ---------------------------------------------------------------------------
# providers & text cleanup
# ---------------------------------------------------------------------------


def test_file_provider_roundtrip(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text(
        "7\t2\t3\n1 0 0\n0 1 0\n9\t1\t3\n0.5 0.5 0\n",
        encoding="utf-8",
    )
    provider = FileEmbeddingProvider(path)
    got = provider.token_embeddings([7, 9, 11])
    assert set(got) == {7, 9}
    assert got[7].matrix.shape == (2, 3)
    np.testing.assert_allclose(got[9].matrix, [[0.5, 0.5, 0.0]])


def test_normalize_text():
    assert normalize_text("see https://a.com/x?y=1  now\n\tok") == "see now ok"
