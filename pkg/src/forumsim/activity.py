"""Activity, participation, and toxicity summaries over an event log.

Mention replies are comments for every statistic here; "active" on a day
means at least one post, comment, read, or search event, so lurkers count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import requests

from .events import COMMENT_EVENT_TYPES, EventRecord

ACTIVE_EVENT_TYPES = frozenset({"post", "comment", "mention_reply", "read", "search"})
TOXICITY_THRESHOLDS = (0.25, 0.50)


@dataclass(frozen=True)
class DailyMetrics:
    day: int
    posts: int
    comments: int
    unique_active_users: int
    interactions_per_active_user: float
    new_users: int
    churned_users: int


@dataclass(frozen=True)
class RunSummary:
    posts: int
    comments: int
    unique_users: int
    avg_thread_length: float
    comments_per_post: float
    posts_per_user: dict
    thread_length_defined: bool


@dataclass(frozen=True)
class ToxicityReport:
    layer: str
    mean: float
    share_above_025: float
    share_above_050: float
    n: int
    partial: bool = False


def daily_activity(events: list[EventRecord]) -> list[DailyMetrics]:
    if not events:
        return []
    first, last = events[0].day, events[-1].day
    posts = {d: 0 for d in range(first, last + 1)}
    comments = dict(posts)
    joins = dict(posts)
    churns = dict(posts)
    actives: dict[int, set] = {d: set() for d in posts}
    for ev in events:
        if ev.type == "post":
            posts[ev.day] += 1
        elif ev.type in COMMENT_EVENT_TYPES:
            comments[ev.day] += 1
        elif ev.type == "join":
            joins[ev.day] += 1
        elif ev.type == "churn":
            churns[ev.day] += 1
        if ev.type in ACTIVE_EVENT_TYPES and ev.agent is not None:
            actives[ev.day].add(ev.agent)
    out = []
    for d in sorted(posts):
        n_active = len(actives[d])
        interactions = posts[d] + comments[d]
        out.append(
            DailyMetrics(
                day=d,
                posts=posts[d],
                comments=comments[d],
                unique_active_users=n_active,
                interactions_per_active_user=interactions / n_active if n_active else 0.0,
                new_users=joins[d],
                churned_users=churns[d],
            )
        )
    return out


def run_summary(events: list[EventRecord]) -> RunSummary:
    """Whole-run totals; avg thread length is 1 + comments/posts."""
    n_posts = sum(1 for ev in events if ev.type == "post")
    n_comments = sum(1 for ev in events if ev.type in COMMENT_EVENT_TYPES)
    producers = {
        ev.agent
        for ev in events
        if ev.type == "post" or ev.type in COMMENT_EVENT_TYPES
    }
    counts = posts_per_user(events)["counts"]
    defined = n_posts > 0
    return RunSummary(
        posts=n_posts,
        comments=n_comments,
        unique_users=len(producers),
        avg_thread_length=1.0 + n_comments / n_posts if defined else 0.0,
        comments_per_post=n_comments / n_posts if defined else 0.0,
        posts_per_user=counts,
        thread_length_defined=defined,
    )


def posts_per_user(events: list[EventRecord]) -> dict:
    """Per-user post counts plus log(count+1) values for plotting.

    The user set is everyone who appears in any action event, so pure
    lurkers contribute zeros.
    """
    users = {ev.agent for ev in events if ev.type in ACTIVE_EVENT_TYPES and ev.agent is not None}
    counts = {u: 0 for u in users}
    for ev in events:
        if ev.type == "post":
            counts[ev.agent] = counts.get(ev.agent, 0) + 1
    log_values = {u: math.log(c + 1) for u, c in counts.items()}
    return {"counts": counts, "log1p": log_values}


class HttpToxicityScorer:
    """Client for the scoring service: request {texts}, response {scores}."""

    def __init__(self, url: str, timeout: float = 120.0):
        self.url = url
        self.timeout = timeout

    def __call__(self, texts: list[str]) -> list[float]:
        resp = requests.post(self.url, json={"texts": list(texts)}, timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()["scores"]


def toxicity_report(texts_by_layer: dict, scorer, batch_size: int = 64) -> list[ToxicityReport]:
    """Score each layer's texts and summarize mean and tail shares.

    ``scorer(texts) -> scores`` is pluggable (HTTP client or stub); a
    failing batch marks the layer partial and the report covers what was
    scored. Threshold comparisons are inclusive.
    """
    reports = []
    layer_scores: dict[str, list[float]] = {}
    layer_partial: dict[str, bool] = {}
    for layer, texts in texts_by_layer.items():
        scores: list[float] = []
        partial = False
        for start in range(0, len(texts), batch_size):
            batch = texts[start : start + batch_size]
            try:
                got = scorer(batch)
            except Exception:
                partial = True
                continue
            if len(got) != len(batch):
                partial = True
                continue
            scores.extend(float(s) for s in got)
        layer_scores[layer] = scores
        layer_partial[layer] = partial
    if "all" not in texts_by_layer:
        layer_scores["all"] = [s for layer in texts_by_layer for s in layer_scores[layer]]
        layer_partial["all"] = any(layer_partial.values())
    for layer, scores in layer_scores.items():
        n = len(scores)
        reports.append(
            ToxicityReport(
                layer=layer,
                mean=sum(scores) / n if n else 0.0,
                share_above_025=sum(1 for s in scores if s >= 0.25) / n if n else 0.0,
                share_above_050=sum(1 for s in scores if s >= 0.50) / n if n else 0.0,
                n=n,
                partial=layer_partial[layer],
            )
        )
    return reports
