"""Two-block hub-and-spoke stochastic block model on the largest component.

Inference is collapsed Gibbs sampling on a Bernoulli SBM with Beta(1,1)
priors on the three block-pair densities: each single-site update draws a
node's label from its exact conditional posterior given all other labels,
rejecting flips that would empty a block. Edge weights are ignored for
inference (binary adjacency); weights enter only the modularity metric.

Every recorded partition is scored (block densities, weighted two-block
modularity, label assortativity, description length) and oriented so that
core-core density >= core-periphery density >= periphery-periphery density;
samples where no orientation satisfies the ordering are marked invalid and
excluded from ranking.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import networkx as nx

CORE, PERIPHERY = "core", "periphery"


class CorePeripheryError(ValueError):
    pass


@dataclass(frozen=True)
class CPParams:
    n_gibbs: int = 100          # recorded sweeps per chain
    burnin_factor: int = 10     # burn-in single-site updates = factor * |V|
    n_runs: int = 5             # independent chains
    window_size: int = 25
    n_windows: int = 4
    consensus_size: int = 50
    mdl_samples: int = 10000    # used only by the MDL variance diagnostic
    composite_weights: tuple[float, float, float, float] = (0.3, 0.3, 0.2, 0.2)

    def __post_init__(self):
        if self.window_size * self.n_windows != self.n_gibbs:
            raise CorePeripheryError("window_size * n_windows must equal n_gibbs")
        if self.consensus_size > self.n_gibbs:
            raise CorePeripheryError("consensus_size cannot exceed n_gibbs")


@dataclass
class QualityMetrics:
    core_density: float
    periphery_density: float
    cp_density: float
    modularity: float
    assortativity: float
    mdl: float
    composite: float | None = None


@dataclass
class PartitionSample:
    labels: dict
    core_size: int
    quality: QualityMetrics
    chain: int
    window: int
    valid: bool


@dataclass
class CorePeripheryFit:
    samples: list[PartitionSample]
    consensus: list[dict]            # one per chain
    core_size_sd: float
    best: PartitionSample | None


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


class _GibbsState:
    """Incremental block statistics for single-site conditional updates."""

    def __init__(self, adjacency: list[list[int]], labels: list[int]):
        self.adj = adjacency
        self.lab = labels            # 1 = core, 0 = periphery
        self.n_core = sum(labels)
        self.n_peri = len(labels) - self.n_core
        self.e_cc = self.e_cp = self.e_pp = 0
        for u, neigh in enumerate(adjacency):
            for v in neigh:
                if v <= u:
                    continue
                lu, lv = labels[u], labels[v]
                if lu and lv:
                    self.e_cc += 1
                elif lu or lv:
                    self.e_cp += 1
                else:
                    self.e_pp += 1

    def update_node(self, u: int, rng: random.Random) -> None:
        lu = self.lab[u]
        # a flip away from a singleton block would empty it
        if (lu and self.n_core == 1) or (not lu and self.n_peri == 1):
            return
        d_core = sum(self.lab[v] for v in self.adj[u])
        d_peri = len(self.adj[u]) - d_core
        # statistics with u removed
        n_c, n_p = self.n_core, self.n_peri
        e_cc, e_cp, e_pp = self.e_cc, self.e_cp, self.e_pp
        if lu:
            n_c -= 1
            e_cc -= d_core
            e_cp -= d_peri
        else:
            n_p -= 1
            e_pp -= d_peri
            e_cp -= d_core

        def log_weight(as_core: bool) -> float:
            if as_core:
                nc, np_ = n_c + 1, n_p
                ecc, ecp, epp = e_cc + d_core, e_cp + d_peri, e_pp
            else:
                nc, np_ = n_c, n_p + 1
                ecc, ecp, epp = e_cc, e_cp + d_core, e_pp + d_peri
            ncc = nc * (nc - 1) // 2
            ncp = nc * np_
            npp = np_ * (np_ - 1) // 2
            return (
                _log_beta(ecc + 1, ncc - ecc + 1)
                + _log_beta(ecp + 1, ncp - ecp + 1)
                + _log_beta(epp + 1, npp - epp + 1)
            )

        delta = log_weight(False) - log_weight(True)
        p_core = 1.0 / (1.0 + math.exp(delta)) if delta < 700 else 0.0
        new = 1 if rng.random() < p_core else 0
        self.lab[u] = new
        if new:
            self.n_core, self.n_peri = n_c + 1, n_p
            self.e_cc, self.e_cp, self.e_pp = e_cc + d_core, e_cp + d_peri, e_pp
        else:
            self.n_core, self.n_peri = n_c, n_p + 1
            self.e_cc, self.e_cp, self.e_pp = e_cc, e_cp + d_core, e_pp + d_peri

    def sweep(self, rng: random.Random, order_buffer: list[int]) -> None:
        rng.shuffle(order_buffer)
        for u in order_buffer:
            self.update_node(u, rng)


def _adjacency(graph: nx.Graph) -> tuple[list, list[list[int]]]:
    nodes = sorted(graph.nodes)
    index = {u: i for i, u in enumerate(nodes)}
    adjacency = [[index[v] for v in graph[u]] for u in nodes]
    return nodes, adjacency


def gibbs_sweep(labels: dict, graph: nx.Graph, rng: random.Random) -> dict:
    """One full sweep: every node resampled from its conditional, random order."""
    nodes, adjacency = _adjacency(graph)
    lab = [1 if labels[u] == CORE else 0 for u in nodes]
    state = _GibbsState(adjacency, lab)
    state.sweep(rng, list(range(len(nodes))))
    return {u: (CORE if state.lab[i] else PERIPHERY) for i, u in enumerate(nodes)}


def _block_counts(graph: nx.Graph, labels: dict) -> tuple[int, int, int, int, int]:
    n_core = sum(1 for u in graph.nodes if labels[u] == CORE)
    n_peri = graph.number_of_nodes() - n_core
    e_cc = e_cp = e_pp = 0
    for u, v in graph.edges:
        cu, cv = labels[u] == CORE, labels[v] == CORE
        if cu and cv:
            e_cc += 1
        elif cu or cv:
            e_cp += 1
        else:
            e_pp += 1
    return n_core, n_peri, e_cc, e_cp, e_pp


def _densities(n_core, n_peri, e_cc, e_cp, e_pp) -> tuple[float, float, float]:
    d_cc = n_core * (n_core - 1) // 2
    d_cp = n_core * n_peri
    d_pp = n_peri * (n_peri - 1) // 2
    return (
        e_cc / d_cc if d_cc else 0.0,
        e_pp / d_pp if d_pp else 0.0,
        e_cp / d_cp if d_cp else 0.0,
    )


def mdl_hubspoke(graph: nx.Graph, labels: dict) -> float:
    """Description length in bits: block-pair Bernoulli likelihood plus one
    bit per node label. Saturated pairs (density 0 or 1) cost no bits."""
    n_core, n_peri, e_cc, e_cp, e_pp = _block_counts(graph, labels)
    if n_core == 0 or n_peri == 0:
        raise CorePeripheryError("both blocks must be non-empty")
    pairs = (
        (e_cc, n_core * (n_core - 1) // 2),
        (e_cp, n_core * n_peri),
        (e_pp, n_peri * (n_peri - 1) // 2),
    )
    bits = 0.0
    for e, n in pairs:
        if n == 0:
            continue
        p = e / n
        if p <= 0.0 or p >= 1.0:
            continue
        bits -= e * math.log2(p) + (n - e) * math.log2(1.0 - p)
    return bits + graph.number_of_nodes()


def mdl_variance_diagnostic(graph: nx.Graph, labels: dict, n_samples: int, rng) -> float:
    """SD of the description length under parametric resampling of dyads.

    A scale for how sharply the MDL separates partitions on graphs this
    size; not used in ranking.
    """
    n_core, n_peri, e_cc, e_cp, e_pp = _block_counts(graph, labels)
    pairs = (
        (e_cc, n_core * (n_core - 1) // 2),
        (e_cp, n_core * n_peri),
        (e_pp, n_peri * (n_peri - 1) // 2),
    )
    draws = []
    per_pair = max(1, n_samples // 3)
    for e, n in pairs:
        if n == 0:
            continue
        p = e / n
        if p <= 0.0 or p >= 1.0:
            continue
        for _ in range(per_pair):
            k = sum(1 for _ in range(32) if rng.random() < p)  # 32-dyad subsample
            q = k / 32
            if 0.0 < q < 1.0:
                draws.append(-n * (q * math.log2(p) + (1 - q) * math.log2(1 - p)))
    if len(draws) < 2:
        return 0.0
    mean = sum(draws) / len(draws)
    return math.sqrt(sum((d - mean) ** 2 for d in draws) / (len(draws) - 1))


def partition_quality(graph: nx.Graph, labels: dict) -> QualityMetrics:
    """Score one partition; requires both blocks non-empty."""
    n_core, n_peri, e_cc, e_cp, e_pp = _block_counts(graph, labels)
    if n_core == 0 or n_peri == 0:
        raise CorePeripheryError("both blocks must be non-empty")
    rho_cc, rho_pp, rho_cp = _densities(n_core, n_peri, e_cc, e_cp, e_pp)
    return QualityMetrics(
        core_density=rho_cc,
        periphery_density=rho_pp,
        cp_density=rho_cp,
        modularity=_weighted_modularity(graph, labels),
        assortativity=_label_assortativity(graph, labels),
        mdl=mdl_hubspoke(graph, labels),
    )


def _weighted_modularity(graph: nx.Graph, labels: dict) -> float:
    two_w = 2.0 * sum(d.get("weight", 1.0) for _u, _v, d in graph.edges(data=True))
    if two_w == 0:
        return 0.0
    sum_in = {CORE: 0.0, PERIPHERY: 0.0}
    sum_tot = {CORE: 0.0, PERIPHERY: 0.0}
    for u, v, d in graph.edges(data=True):
        w = d.get("weight", 1.0)
        if labels[u] == labels[v]:
            sum_in[labels[u]] += 2.0 * w
        sum_tot[labels[u]] += w
        sum_tot[labels[v]] += w
    q = 0.0
    for block in (CORE, PERIPHERY):
        q += sum_in[block] / two_w - (sum_tot[block] / two_w) ** 2
    return q


def _label_assortativity(graph: nx.Graph, labels: dict) -> float:
    m = graph.number_of_edges()
    if m == 0:
        return 0.0
    e = {(a, b): 0.0 for a in (CORE, PERIPHERY) for b in (CORE, PERIPHERY)}
    for u, v in graph.edges:
        e[(labels[u], labels[v])] += 1.0
        e[(labels[v], labels[u])] += 1.0
    total = 2.0 * m
    e = {k: x / total for k, x in e.items()}
    tr = e[(CORE, CORE)] + e[(PERIPHERY, PERIPHERY)]
    a_core = e[(CORE, CORE)] + e[(CORE, PERIPHERY)]
    a_peri = e[(PERIPHERY, PERIPHERY)] + e[(PERIPHERY, CORE)]
    sq = a_core * a_core + a_peri * a_peri
    if abs(1.0 - sq) < 1e-12:
        return 1.0 if abs(tr - 1.0) < 1e-12 else 0.0
    return (tr - sq) / (1.0 - sq)


def composite_score(quality: QualityMetrics, mdl_min: float, mdl_max: float,
                    weights: tuple[float, float, float, float] = (0.3, 0.3, 0.2, 0.2)) -> float:
    """Weighted blend of core density, coupling, modularity, normalized MDL."""
    if mdl_max > mdl_min:
        mdl_norm = (mdl_max - quality.mdl) / (mdl_max - mdl_min)
    else:
        mdl_norm = 0.5
    w_cd, w_cp, w_mod, w_mdl = weights
    return (
        w_cd * quality.core_density
        + w_cp * quality.cp_density
        + w_mod * quality.modularity
        + w_mdl * mdl_norm
    )


def _orient(labels: dict, graph: nx.Graph) -> tuple[dict, bool]:
    """Swap blocks if that restores the density ordering; flag unorderable."""
    n_core, n_peri, e_cc, e_cp, e_pp = _block_counts(graph, labels)
    rho_cc, rho_pp, rho_cp = _densities(n_core, n_peri, e_cc, e_cp, e_pp)
    if rho_cc >= rho_cp >= rho_pp:
        return labels, True
    if rho_pp >= rho_cp >= rho_cc:
        swapped = {
            u: (CORE if lab == PERIPHERY else PERIPHERY) for u, lab in labels.items()
        }
        return swapped, True
    return labels, False


def fit_core_periphery(graph: nx.Graph, params: CPParams, rng: random.Random) -> CorePeripheryFit:
    """Run independent chains on a connected graph and score every sample.

    Each chain starts from the top-10%-degree core, burns in with
    ``burnin_factor * |V|`` single-site updates, then records ``n_gibbs``
    sweeps grouped into windows, plus a per-node majority consensus over
    the final ``consensus_size`` samples.
    """
    if graph.number_of_nodes() < 3:
        raise CorePeripheryError("need at least 3 nodes")
    if not nx.is_connected(graph):
        raise CorePeripheryError(
            "graph is disconnected; fit on largest_component() output"
        )
    nodes, adjacency = _adjacency(graph)
    n = len(nodes)
    degree = [len(a) for a in adjacency]
    k_init = max(1, round(0.10 * n))
    by_degree = sorted(range(n), key=lambda i: (-degree[i], i))
    init_core = set(by_degree[:k_init])

    chain_seeds = [rng.randrange(2**63) for _ in range(params.n_runs)]
    samples: list[PartitionSample] = []
    consensus: list[dict] = []
    for chain_idx, seed in enumerate(chain_seeds):
        chain_rng = random.Random(seed)
        lab = [1 if i in init_core else 0 for i in range(n)]
        state = _GibbsState(adjacency, lab)
        for _ in range(params.burnin_factor * n):
            state.update_node(chain_rng.randrange(n), chain_rng)
        order = list(range(n))
        chain_samples: list[PartitionSample] = []
        for sweep_idx in range(params.n_gibbs):
            state.sweep(chain_rng, order)
            labels = {nodes[i]: (CORE if state.lab[i] else PERIPHERY) for i in range(n)}
            labels, valid = _orient(labels, graph)
            quality = partition_quality(graph, labels)
            chain_samples.append(
                PartitionSample(
                    labels=labels,
                    core_size=sum(1 for v in labels.values() if v == CORE),
                    quality=quality,
                    chain=chain_idx,
                    window=sweep_idx // params.window_size,
                    valid=valid,
                )
            )
        tail = chain_samples[-params.consensus_size:]
        voting = [s for s in tail if s.valid] or tail
        cons = {}
        for u in nodes:
            votes = sum(1 for s in voting if s.labels[u] == CORE)
            cons[u] = CORE if 2 * votes > len(voting) else PERIPHERY
        consensus.append(cons)
        samples.extend(chain_samples)

    valid_samples = [s for s in samples if s.valid]
    if valid_samples:
        mdls = [s.quality.mdl for s in valid_samples]
        lo, hi = min(mdls), max(mdls)
        for s in valid_samples:
            s.quality.composite = composite_score(
                s.quality, lo, hi, params.composite_weights
            )
        sizes = [s.core_size for s in valid_samples]
        mean = sum(sizes) / len(sizes)
        sd = math.sqrt(sum((x - mean) ** 2 for x in sizes) / len(sizes))
        best = max(valid_samples, key=lambda s: s.quality.composite)
    else:
        sd, best = 0.0, None
    return CorePeripheryFit(
        samples=samples, consensus=consensus, core_size_sd=sd, best=best
    )


def rank_core_members(graph: nx.Graph, labels: dict) -> list:
    """Core nodes by degree, then weighted degree, then id."""
    core_nodes = [u for u in graph.nodes if labels[u] == CORE]
    if not core_nodes:
        raise CorePeripheryError("core is empty")

    def key(u):
        wdeg = sum(d.get("weight", 1.0) for d in graph[u].values())
        return (-graph.degree(u), -wdeg, u)

    return sorted(core_nodes, key=key)
