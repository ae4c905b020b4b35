"""Command-line entry point: run simulations, analyze logs, emit reports.

Exit codes are a stable contract: 0 success, 2 configuration error,
3 data error, 4 missing artifact. Outputs are byte-reproducible for
identical inputs and seed (no timestamps, fixed float formatting).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import random
import sys
from importlib import resources

from . import __version__
from .activity import HttpToxicityScorer, daily_activity, run_summary, toxicity_report
from .coreperiphery import CPParams, CorePeripheryError, fit_core_periphery
from .events import EventLogError, read_events, write_events
from .genlayer import CatalogError
from .replygraph import (
    build_reply_graph,
    descriptors,
    largest_component,
    write_degree_histogram,
    write_edge_list,
)
from .scheduler import ConfigError, SimConfig, load_config, run_simulation
from .textmetrics import (
    EmbeddingProviderError,
    FileEmbeddingProvider,
    HttpEmbeddingProvider,
    enumerate_pairs,
    entropy_by_lag,
    extract_chains,
    nearest_neighbor_similarity,
    normalize_text,
    score_pairs,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_MISSING = 4

# fixed internal seed for analysis-side sampling (core-periphery chains)
ANALYSIS_SEED = 8675309


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _notice(msg: str) -> None:
    print(f"notice: {msg}")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    config_path = args.config or os.environ.get("SIM_CONFIG")
    try:
        config = load_config(config_path) if config_path else SimConfig()
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    seed = args.seed
    if seed is None and os.environ.get("SIM_SEED"):
        try:
            seed = int(os.environ["SIM_SEED"])
        except ValueError:
            _err("SIM_SEED must be an integer")
            return EXIT_CONFIG
    if seed is not None:
        config.seed = seed
    if config.seed is None:
        _err("a seed is required: pass --seed, set SIM_SEED, or put seed in the config")
        return EXIT_CONFIG
    try:
        platform = run_simulation(config)
    except (ConfigError, CatalogError, OSError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    events_path = os.path.join(args.out, "events.jsonl")
    write_events(events_path, platform.events)
    manifest = {
        "config": config.to_dict(),
        "seed": config.seed,
        "version": __version__,
    }
    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    summary = run_summary(platform.events)
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"days={config.days}\n")
        fh.write(f"posts={summary.posts}\n")
        fh.write(f"comments={summary.comments}\n")
        fh.write(f"unique_users={summary.unique_users}\n")
        fh.write(f"avg_thread_length={summary.avg_thread_length:.6f}\n")
    print(events_path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def _thread_nodes_and_texts(events):
    nodes, texts = [], {}
    for ev in events:
        if ev.type == "post":
            nodes.append((ev.post_id, None, ev.agent))
            title = ev.title or ""
            body = ev.text or ""
            texts[ev.post_id] = f"{title}\n{body}".strip()
        elif ev.type in ("comment", "mention_reply"):
            nodes.append((ev.comment_id, ev.parent_id, ev.agent))
            texts[ev.comment_id] = ev.text or ""
    return nodes, texts


def _post_and_comment_texts(events):
    posts, comments = [], []
    for ev in events:
        if ev.type == "post":
            posts.append(((ev.title or "") + "\n" + (ev.text or "")).strip())
        elif ev.type in ("comment", "mention_reply"):
            comments.append(ev.text or "")
    return posts, comments


def cmd_analyze(args) -> int:
    try:
        events = read_events(args.events)
    except OSError as exc:
        _err(str(exc))
        return EXIT_DATA
    except EventLogError as exc:
        _err(f"corrupt event log: {exc}")
        return EXIT_DATA
    os.makedirs(args.out, exist_ok=True)

    daily = daily_activity(events)
    _write_csv(
        os.path.join(args.out, "daily.csv"),
        [
            "day",
            "posts",
            "comments",
            "unique_active_users",
            "interactions_per_active_user",
            "new_users",
            "churned_users",
        ],
        [
            [
                d.day,
                d.posts,
                d.comments,
                d.unique_active_users,
                d.interactions_per_active_user,
                d.new_users,
                d.churned_users,
            ]
            for d in daily
        ],
    )

    summary = run_summary(events)
    _write_csv(
        os.path.join(args.out, "summary.csv"),
        [
            "posts",
            "comments",
            "unique_users",
            "avg_thread_length",
            "comments_per_post",
            "thread_length_defined",
        ],
        [
            [
                summary.posts,
                summary.comments,
                summary.unique_users,
                summary.avg_thread_length,
                summary.comments_per_post,
                summary.thread_length_defined,
            ]
        ],
    )

    graph = build_reply_graph(events)
    write_edge_list(os.path.join(args.out, "graph.edges"), graph)
    write_degree_histogram(os.path.join(args.out, "degree_histogram.csv"), graph)
    desc = descriptors(graph)
    _write_csv(
        os.path.join(args.out, "descriptors.csv"),
        [
            "nodes",
            "edges",
            "density",
            "avg_degree",
            "weighted_avg_degree",
            "avg_weighted_clustering",
            "lcc_nodes",
            "lcc_share",
        ],
        [
            [
                desc.nodes,
                desc.edges,
                desc.density,
                desc.avg_degree,
                desc.weighted_avg_degree,
                desc.avg_weighted_clustering,
                desc.lcc_nodes,
                desc.lcc_share,
            ]
        ],
    )

    lcc, _share = largest_component(graph)
    if lcc.graph.number_of_nodes() >= 3:
        try:
            fit = fit_core_periphery(lcc.graph, CPParams(), random.Random(ANALYSIS_SEED))
        except CorePeripheryError as exc:
            _notice(f"core-periphery fit skipped: {exc}")
            fit = None
    else:
        _notice("core-periphery fit skipped: largest component below 3 nodes")
        fit = None
    if fit is not None:
        _write_csv(
            os.path.join(args.out, "coreperiphery.csv"),
            [
                "chain",
                "window",
                "core_size",
                "core_density",
                "periphery_density",
                "cp_density",
                "modularity",
                "assortativity",
                "mdl",
                "composite",
                "valid",
            ],
            [
                [
                    s.chain,
                    s.window,
                    s.core_size,
                    s.quality.core_density,
                    s.quality.periphery_density,
                    s.quality.cp_density,
                    s.quality.modularity,
                    s.quality.assortativity,
                    s.quality.mdl,
                    s.quality.composite if s.quality.composite is not None else "",
                    s.valid,
                ]
                for s in fit.samples
            ],
        )
        if fit.best is not None:
            with open(os.path.join(args.out, "partitions.txt"), "w", encoding="utf-8") as fh:
                for node in sorted(fit.best.labels):
                    fh.write(f"{node}\t{fit.best.labels[node]}\n")

    services_base = os.environ.get("MODEL_SERVICES_URL", "").rstrip("/")
    tox_endpoint = args.tox_endpoint or (services_base + "/toxicity" if services_base else None)
    embed_endpoint = args.embed_endpoint or (services_base + "/embed" if services_base else None)

    post_texts, comment_texts = _post_and_comment_texts(events)
    if tox_endpoint:
        scorer = HttpToxicityScorer(tox_endpoint)
        reports = toxicity_report(
            {"posts": post_texts, "comments": comment_texts}, scorer
        )
        _write_csv(
            os.path.join(args.out, "toxicity.csv"),
            ["layer", "mean", "share_above_025", "share_above_050", "n", "partial"],
            [
                [r.layer, r.mean, r.share_above_025, r.share_above_050, r.n, r.partial]
                for r in reports
            ],
        )
    else:
        _notice("toxicity scoring skipped: no scorer endpoint")

    nodes, texts = _thread_nodes_and_texts(events)
    chains = extract_chains(nodes)
    pairs = [p for c in chains for p in enumerate_pairs(c)]
    provider = None
    if args.embeddings:
        try:
            provider = FileEmbeddingProvider(args.embeddings)
        except (OSError, EmbeddingProviderError) as exc:
            _err(f"embedding file unusable: {exc}")
            return EXIT_DATA
    elif embed_endpoint:
        provider = HttpEmbeddingProvider(embed_endpoint)
    if provider is not None and chains:
        item_ids = sorted({i for c in chains for i in c.items})
        try:
            embeddings = provider.token_embeddings(item_ids, texts)
        except EmbeddingProviderError as exc:
            _notice(f"entropy skipped: {exc}")
            embeddings = None
        if embeddings is not None:
            scored = score_pairs(chains, pairs, embeddings)
            _write_csv(
                os.path.join(args.out, "entropy.csv"),
                ["chain_id", "i", "j", "lag", "pair_type", "H"],
                [[p.chain_id, p.i, p.j, p.lag, p.pair_type, p.entropy] for p in scored],
            )
            stats = entropy_by_lag(scored)
            _notice(
                "entropy pairs scored: "
                f"{stats['overall']['count']} (mean {stats['overall']['mean']:.4f})"
            )
    else:
        _notice("entropy skipped: no embeddings available")

    if embed_endpoint and (post_texts or comment_texts):
        provider = HttpEmbeddingProvider(embed_endpoint)
        rows = []
        try:
            for layer, layer_texts in (("posts", post_texts), ("comments", comment_texts)):
                usable = [t for t in layer_texts if normalize_text(t)]
                if not usable:
                    continue
                vectors = provider.sentence_embeddings(usable)
                stats = nearest_neighbor_similarity(vectors, vectors)
                rows.append(
                    [
                        layer,
                        stats["n_queries"],
                        stats["n_references"],
                        stats["mean"],
                        stats["median"],
                        stats["share_above_060"],
                        stats["share_above_080"],
                    ]
                )
        except EmbeddingProviderError as exc:
            _notice(f"nn-similarity skipped: {exc}")
            rows = []
        if rows:
            _write_csv(
                os.path.join(args.out, "nn_similarity.csv"),
                [
                    "layer",
                    "n_queries",
                    "n_references",
                    "mean",
                    "median",
                    "share_above_060",
                    "share_above_080",
                ],
                rows,
            )
    else:
        _notice("nn-similarity skipped: no sentence-embedding endpoint")

    return EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def _load_reference_targets():
    try:
        path = resources.files("forumsim") / "data" / "reference_targets.json"
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError):
        return None


def _read_csv_dict(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cmd_report(args) -> int:
    required = ["summary.csv", "daily.csv", "descriptors.csv"]
    missing = [
        name
        for name in required
        if not os.path.exists(os.path.join(args.analysis, name))
    ]
    if missing:
        _err(f"missing analysis inputs: {', '.join(sorted(missing))}")
        return EXIT_MISSING

    consolidated: dict = {"version": __version__}
    consolidated["summary"] = _read_csv_dict(os.path.join(args.analysis, "summary.csv"))[0]
    consolidated["descriptors"] = _read_csv_dict(
        os.path.join(args.analysis, "descriptors.csv")
    )[0]
    consolidated["daily"] = _read_csv_dict(os.path.join(args.analysis, "daily.csv"))
    for optional in ("toxicity.csv", "coreperiphery.csv", "entropy.csv", "nn_similarity.csv"):
        path = os.path.join(args.analysis, optional)
        if os.path.exists(path):
            consolidated[optional.rsplit(".", 1)[0]] = _read_csv_dict(path)

    targets = _load_reference_targets()
    if targets is not None:
        observed = {}
        observed.update(consolidated["summary"])
        observed.update(consolidated["descriptors"])
        comparison = []
        for entry in targets.get("targets", []):
            metric = entry["metric"]
            if metric in observed:
                comparison.append(
                    {
                        "metric": metric,
                        "observed": observed[metric],
                        "simulation_reference": entry["simulation_reference"],
                        "community_reference": entry["community_reference"],
                    }
                )
        consolidated["reference_comparison"] = comparison
    else:
        _notice("reference targets unavailable; comparison block omitted")

    out_path = os.path.join(args.analysis, f"report.{args.format}")
    if args.format == "json":
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(consolidated, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        rows = []
        for section, content in sorted(consolidated.items()):
            if isinstance(content, dict):
                for key, value in sorted(content.items()):
                    rows.append([section, key, value])
            elif isinstance(content, list):
                for idx, item in enumerate(content):
                    for key, value in sorted(item.items()):
                        rows.append([f"{section}[{idx}]", key, value])
            else:
                rows.append([section, "", content])
        _write_csv(out_path, ["section", "key", "value"], rows)
    print(out_path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forumsim",
        description="Seeded forum simulation and structural analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation and write an event log")
    p_run.add_argument("--config", default=None, help="flat key=value config file")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_an = sub.add_parser("analyze", help="compute analyses over an event log")
    p_an.add_argument("--events", required=True)
    p_an.add_argument("--out", required=True)
    p_an.add_argument("--embeddings", default=None, help="precomputed token-embedding file")
    p_an.add_argument("--tox-endpoint", default=None)
    p_an.add_argument("--embed-endpoint", default=None)
    p_an.set_defaults(func=cmd_analyze)

    p_rep = sub.add_parser("report", help="consolidate an analysis directory")
    p_rep.add_argument("--analysis", required=True)
    p_rep.add_argument("--format", choices=("csv", "json"), default="json")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
