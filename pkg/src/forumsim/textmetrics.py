"""Reply-chain extraction, convergence entropy, and embedding similarity.

A chain is a maximal strictly-alternating two-speaker segment of a
root-to-leaf reply path, found by a single left-to-right scan that restarts
at the item which broke the alternation. Entropy is computed per turn pair
with the later turn scored against the earlier one: each token's best
cosine match in the earlier turn is mapped to a log-density under a Normal
kernel (center 1, applied to 1+maxcos), and H = -sum(exp(l)*l).

Embeddings come from a provider: either the HTTP model service or a
precomputed-matrix file; tests use synthetic matrices only.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from statistics import mean, median

import numpy as np
import requests

MAX_LAG = 10
MIN_CHAIN_LEN = 3
INTERPERSONAL, INTRAPERSONAL = "interpersonal", "intrapersonal"

_URL_RE = re.compile(r"https?://\S+")


def normalize_text(text: str) -> str:
    """Light cleanup applied before any embedding: drop URLs, collapse space."""
    return " ".join(_URL_RE.sub(" ", text).split())


@dataclass(frozen=True)
class Chain:
    chain_id: int
    items: tuple[int, ...]
    speakers: tuple

    def __post_init__(self):
        if len(self.items) < MIN_CHAIN_LEN:
            raise ValueError("chain shorter than minimum length 3")
        if len(set(self.speakers)) != 2:
            raise ValueError("chain must have exactly two speakers")
        for a, b in zip(self.speakers, self.speakers[1:]):
            if a == b:
                raise ValueError("chain speakers must strictly alternate")

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class TurnPair:
    chain_id: int
    i: int
    j: int
    lag: int
    pair_type: str
    entropy: float | None = None


@dataclass(frozen=True)
class KernelParams:
    sigma: float = 0.3
    center: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class TokenEmbeddings:
    matrix: np.ndarray  # (tokens, dim), special tokens already excluded

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] < 1:
            raise ValueError("token matrix must be 2-D with at least one row")
        if m.shape[0] > 256:
            raise ValueError("token count exceeds the 256-token truncation")
        if not np.isfinite(m).all():
            raise ValueError("token vectors must be finite")
        object.__setattr__(self, "matrix", m)


# ---------------------------------------------------------------------------
# chain extraction
# ---------------------------------------------------------------------------


def _segment_path(path_items: list[int], path_speakers: list) -> list[tuple[tuple, tuple]]:
    """Greedy left-to-right segmentation into maximal alternating chains."""
    out = []
    start = 0
    n = len(path_items)
    while start < n:
        end = start  # inclusive
        speakers = {path_speakers[start]}
        while end + 1 < n:
            nxt = path_speakers[end + 1]
            if nxt == path_speakers[end]:
                break
            if nxt not in speakers and len(speakers) == 2:
                break
            speakers.add(nxt)
            end += 1
        if end - start + 1 >= MIN_CHAIN_LEN and len(speakers) == 2:
            out.append(
                (
                    tuple(path_items[start : end + 1]),
                    tuple(path_speakers[start : end + 1]),
                )
            )
        start = end + 1
    return out


def extract_chains(nodes: list[tuple]) -> list[Chain]:
    """Extract alternating two-speaker chains from reply forests.

    ``nodes`` holds (item_id, parent_id_or_None, speaker) triples; roots
    have parent None. Chains found on shared path prefixes are
    de-duplicated by their item-id sequence.
    """
    parent = {}
    speaker = {}
    children: dict = {}
    roots = []
    for item_id, parent_id, spk in nodes:
        parent[item_id] = parent_id
        speaker[item_id] = spk
        children.setdefault(item_id, [])
        if parent_id is None:
            roots.append(item_id)
        else:
            children.setdefault(parent_id, []).append(item_id)
    chains: list[Chain] = []
    seen: set[tuple] = set()
    for root in roots:
        stack = [(root, [root])]
        while stack:
            node, path = stack.pop()
            kids = children.get(node, [])
            if not kids:
                speakers = [speaker[i] for i in path]
                for items, spks in _segment_path(path, speakers):
                    if items in seen:
                        continue
                    seen.add(items)
                    chains.append(
                        Chain(chain_id=len(chains), items=items, speakers=spks)
                    )
                continue
            for kid in sorted(kids, reverse=True):
                stack.append((kid, path + [kid]))
    return chains


def enumerate_pairs(chain: Chain, max_lag: int = MAX_LAG) -> list[TurnPair]:
    """All ordered turn pairs (i, j), i < j, lag <= max_lag.

    Odd lag crosses speakers (interpersonal); even lag stays within one
    speaker (intrapersonal).
    """
    pairs = []
    n = len(chain)
    for i in range(n):
        for j in range(i + 1, min(i + max_lag, n - 1) + 1):
            lag = j - i
            pairs.append(
                TurnPair(
                    chain_id=chain.chain_id,
                    i=i,
                    j=j,
                    lag=lag,
                    pair_type=INTERPERSONAL if lag % 2 == 1 else INTRAPERSONAL,
                )
            )
    return pairs


# ---------------------------------------------------------------------------
# convergence entropy
# ---------------------------------------------------------------------------


def convergence_entropy(
    x: TokenEmbeddings, y: TokenEmbeddings, kernel: KernelParams = KernelParams()
) -> float:
    """Entropy of the later turn ``x`` scored against the earlier turn ``y``."""
    xm = _unit_rows(x.matrix, "x")
    ym = _unit_rows(y.matrix, "y")
    if xm.shape[0] == 0 or ym.shape[0] == 0:
        raise ValueError("no usable tokens after dropping zero-norm vectors")
    maxcos = (xm @ ym.T).max(axis=1)
    log_norm = -math.log(kernel.sigma * math.sqrt(2.0 * math.pi))
    ell = log_norm - ((1.0 + maxcos - kernel.center) ** 2) / (2.0 * kernel.sigma ** 2)
    return float(-(np.exp(ell) * ell).sum())


def _unit_rows(matrix: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    keep = norms > 0
    if not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} zero-norm token(s) in {name}")
    return matrix[keep] / norms[keep, None]


def score_pairs(
    chains: list[Chain],
    pairs: list[TurnPair],
    embeddings: dict,
    kernel: KernelParams = KernelParams(),
) -> list[TurnPair]:
    """Fill each pair's entropy from per-item token embeddings.

    ``embeddings`` maps item id -> TokenEmbeddings; pairs whose items lack
    embeddings are dropped.
    """
    by_id = {c.chain_id: c for c in chains}
    scored = []
    for pair in pairs:
        chain = by_id[pair.chain_id]
        earlier = embeddings.get(chain.items[pair.i])
        later = embeddings.get(chain.items[pair.j])
        if earlier is None or later is None:
            continue
        pair.entropy = convergence_entropy(later, earlier, kernel)
        scored.append(pair)
    return scored


def entropy_by_lag(pairs: list[TurnPair]) -> dict:
    """Mean/median/count per lag and per pair type, over scored pairs."""
    scored = [p for p in pairs if p.entropy is not None]
    by_lag = {}
    for lag in range(1, MAX_LAG + 1):
        values = [p.entropy for p in scored if p.lag == lag]
        if values:
            by_lag[lag] = {
                "count": len(values),
                "mean": mean(values),
                "median": median(values),
            }
    by_type = {}
    for pair_type in (INTERPERSONAL, INTRAPERSONAL):
        values = [p.entropy for p in scored if p.pair_type == pair_type]
        if values:
            by_type[pair_type] = {
                "count": len(values),
                "mean": mean(values),
                "median": median(values),
            }
    overall = [p.entropy for p in scored]
    return {
        "by_lag": by_lag,
        "by_type": by_type,
        "overall": {
            "count": len(overall),
            "mean": mean(overall) if overall else 0.0,
            "median": median(overall) if overall else 0.0,
        },
    }


# ---------------------------------------------------------------------------
# nearest-neighbor sentence similarity
# ---------------------------------------------------------------------------


def nearest_neighbor_similarity(
    queries: np.ndarray, references: np.ndarray, thresholds: tuple[float, float] = (0.60, 0.80)
) -> dict:
    """Best-cosine stats for unit-normalized sentence vectors."""
    q = np.asarray(queries, dtype=float)
    r = np.asarray(references, dtype=float)
    if q.size == 0 or r.size == 0:
        raise ValueError("queries and references must be non-empty")
    best = (q @ r.T).max(axis=1)
    lo, hi = thresholds
    return {
        "n_queries": int(q.shape[0]),
        "n_references": int(r.shape[0]),
        "mean": float(best.mean()),
        "median": float(np.median(best)),
        f"share_above_{lo:.2f}".replace(".", ""): float((best >= lo).mean()),
        f"share_above_{hi:.2f}".replace(".", ""): float((best >= hi).mean()),
        "best": best,
    }


# ---------------------------------------------------------------------------
# embedding providers
# ---------------------------------------------------------------------------


class EmbeddingProviderError(RuntimeError):
    pass


class FileEmbeddingProvider:
    """Reads precomputed matrices: header ``id<TAB>T<TAB>dim`` then T rows."""

    def __init__(self, path):
        self._store: dict[int, TokenEmbeddings] = {}
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
        pos = 0
        while pos < len(lines):
            if not lines[pos].strip():
                pos += 1
                continue
            head = lines[pos].split("\t")
            if len(head) != 3:
                raise EmbeddingProviderError(f"bad header at line {pos + 1}")
            ident, t, dim = head[0], int(head[1]), int(head[2])
            rows = []
            for k in range(t):
                vals = lines[pos + 1 + k].split()
                if len(vals) != dim:
                    raise EmbeddingProviderError(
                        f"bad vector width at line {pos + 2 + k}"
                    )
                rows.append([float(v) for v in vals])
            self._store[int(ident)] = TokenEmbeddings(np.array(rows))
            pos += 1 + t
        if not self._store:
            raise EmbeddingProviderError("embedding file is empty")

    def token_embeddings(self, item_ids, texts=None) -> dict:
        return {i: self._store[i] for i in item_ids if i in self._store}


class HttpEmbeddingProvider:
    """Client for the model service's /embed endpoint."""

    def __init__(self, url: str, timeout: float = 120.0, batch_size: int = 32):
        self.url = url
        self.timeout = timeout
        self.batch_size = batch_size

    def _post(self, texts: list[str], mode: str) -> dict:
        try:
            resp = requests.post(
                self.url, json={"texts": texts, "mode": mode}, timeout=self.timeout
            )
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise EmbeddingProviderError(f"embedding service failed: {exc}") from exc

    def token_embeddings(self, item_ids, texts) -> dict:
        out = {}
        ids = list(item_ids)
        for start in range(0, len(ids), self.batch_size):
            chunk = ids[start : start + self.batch_size]
            payload = self._post([normalize_text(texts[i]) or "empty" for i in chunk], "token")
            for ident, matrix in zip(chunk, payload["embeddings"]):
                out[ident] = TokenEmbeddings(np.array(matrix))
        return out

    def sentence_embeddings(self, texts: list[str]) -> np.ndarray:
        vectors = []
        for start in range(0, len(texts), self.batch_size):
            chunk = [normalize_text(t) or "empty" for t in texts[start : start + self.batch_size]]
            payload = self._post(chunk, "sentence")
            vectors.extend(payload["embeddings"])
        return np.array(vectors, dtype=float)
