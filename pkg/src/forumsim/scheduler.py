"""Simulation clock and agent scheduling.

One iteration is one simulated day of 24 rounds (hours). Each round a
random subset of agents activates; an activated agent first serves at most
one pending mention for free, then works through exactly ``budget`` action
menus. At the end of every day churn removes a fraction of the day's
inactive agents (longest inactivity first) and growth adds fresh personas
relative to the pre-churn population.

All stochastic choices flow through a single seeded ``random.Random`` in a
fixed order, so a seeded stub run produces a byte-identical event log.
"""

from __future__ import annotations

import math
import os
import random
import re
from dataclasses import dataclass, field
from importlib import resources

from .genlayer import (
    GenerationError,
    GenParams,
    LinkCatalog,
    PromptSpec,
    StubGenerator,
    HttpGenerator,
    build_prompt,
    load_link_catalog,
    parse_post_output,
    sample_link,
)
from .personas import sample_persona
from .platform import Platform, ROUNDS_PER_DAY

ACTIONS = ("post", "share_link", "comment", "read", "search")
NONE_ACTION = "NONE"

DEFAULT_ENGAGEMENT_WEIGHTS = {
    "post": 0.005,
    "share_link": 0.06,
    "comment": 0.06,
    "read": 0.40,
    "search": 0.10,
}

_MENTION_RE = re.compile(r"@([A-Za-z][A-Za-z0-9]*)")


class ConfigError(ValueError):
    """Invalid simulation configuration; message is line-precise for files."""


@dataclass
class SimConfig:
    days: int = 30
    starting_agents: int = 50
    growth_rate: float = 0.30
    churn_rate: float = 0.90
    engagement_weights: dict = field(
        default_factory=lambda: dict(DEFAULT_ENGAGEMENT_WEIGHTS)
    )
    activation_prob_per_round: float = 0.043
    visibility_window_rounds: int = 180
    thread_read_depth: int = 3
    slate_limit: int = 10
    seed: int | None = None
    generator_mode: str = "stub"
    generator_url: str = ""
    generator_model: str = "dolphin3"
    catalog_path: str | None = None
    # optional diurnal profile; flat by default
    hourly_weights: tuple = tuple([1.0] * ROUNDS_PER_DAY)
    # probability the stub chooser picks NONE (the model's rate is unknown)
    stub_none_prob: float = 0.15

    def __post_init__(self):
        if self.days < 0:
            raise ConfigError("days must be >= 0")
        if self.starting_agents < 0:
            raise ConfigError("starting_agents must be >= 0")
        for name in ("growth_rate", "churn_rate", "activation_prob_per_round"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0,1]")
        if set(self.engagement_weights) != set(ACTIONS):
            raise ConfigError(f"engagement_weights must cover exactly {ACTIONS}")
        if any(w <= 0 for w in self.engagement_weights.values()):
            raise ConfigError("engagement weights must be positive")
        if self.visibility_window_rounds < 0:
            raise ConfigError("visibility_window_rounds must be >= 0")
        if self.thread_read_depth < 1:
            raise ConfigError("thread_read_depth must be >= 1")
        if self.slate_limit < 1:
            raise ConfigError("slate_limit must be >= 1")
        if self.generator_mode not in ("stub", "http"):
            raise ConfigError("generator.mode must be 'stub' or 'http'")
        if len(self.hourly_weights) != ROUNDS_PER_DAY:
            raise ConfigError("hourly_weights needs 24 entries")
        if not (0.0 <= self.stub_none_prob <= 1.0):
            raise ConfigError("stub_none_prob must be in [0,1]")

    def to_dict(self) -> dict:
        flat = {
            "days": self.days,
            "starting_agents": self.starting_agents,
            "growth_rate": self.growth_rate,
            "churn_rate": self.churn_rate,
            "activation_prob_per_round": self.activation_prob_per_round,
            "visibility_window_rounds": self.visibility_window_rounds,
            "thread_read_depth": self.thread_read_depth,
            "slate_limit": self.slate_limit,
            "seed": self.seed,
            "generator.mode": self.generator_mode,
            "generator.url": self.generator_url,
            "generator.model": self.generator_model,
            "catalog_path": self.catalog_path,
        }
        for action in ACTIONS:
            flat[f"engagement_weights.{action}"] = self.engagement_weights[action]
        return flat


_CONFIG_KEY_TYPES = {
    "days": int,
    "starting_agents": int,
    "growth_rate": float,
    "churn_rate": float,
    "activation_prob_per_round": float,
    "visibility_window_rounds": int,
    "thread_read_depth": int,
    "slate_limit": int,
    "seed": int,
    "generator.mode": str,
    "generator.url": str,
    "generator.model": str,
    "catalog_path": str,
    "hourly_weights": "floats",
}
for _a in ACTIONS:
    _CONFIG_KEY_TYPES[f"engagement_weights.{_a}"] = float


def load_config(path) -> SimConfig:
    """Parse a flat ``key = value`` configuration file."""
    kwargs: dict = {}
    weights = dict(DEFAULT_ENGAGEMENT_WEIGHTS)
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _CONFIG_KEY_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            typ = _CONFIG_KEY_TYPES[key]
            try:
                if typ is int:
                    parsed = int(value)
                elif typ is float:
                    parsed = float(value)
                elif typ == "floats":
                    parsed = tuple(float(x) for x in value.split(","))
                else:
                    parsed = value
            except ValueError:
                raise ConfigError(
                    f"{path}:{lineno}: bad value {value!r} for {key}"
                ) from None
            if key.startswith("engagement_weights."):
                weights[key.split(".", 1)[1]] = parsed
            elif key.startswith("generator."):
                kwargs["generator_" + key.split(".", 1)[1]] = parsed
            else:
                kwargs[key] = parsed
    kwargs["engagement_weights"] = weights
    try:
        return SimConfig(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def default_catalog_paths() -> tuple[str, str]:
    data = resources.files("forumsim") / "data"
    return str(data / "catalog.txt"), str(data / "domain_topics.tsv")


def build_generator(config: SimConfig):
    if config.generator_mode == "http":
        if not config.generator_url:
            raise ConfigError("generator.url required for http mode")
        return HttpGenerator(config.generator_url, config.generator_model)
    return StubGenerator(config.seed or 0)


def load_catalog_for(config: SimConfig) -> LinkCatalog:
    if config.catalog_path:
        topics_path = os.path.join(os.path.dirname(config.catalog_path), "domain_topics.tsv")
        if not os.path.exists(topics_path):
            topics_path = default_catalog_paths()[1]
        return load_link_catalog(config.catalog_path, topics_path)
    cat, topics = default_catalog_paths()
    return load_link_catalog(cat, topics)


# ---------------------------------------------------------------------------
# menus and choices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ActionMenu:
    options: tuple[str, str, str]

    def __post_init__(self):
        if len(self.options) != 3 or self.options[0] != NONE_ACTION:
            raise ValueError("menu must be (NONE, a1, a2)")
        a1, a2 = self.options[1], self.options[2]
        if a1 == a2 or a1 not in ACTIONS or a2 not in ACTIONS:
            raise ValueError("menu actions must be two distinct primitives")


def _weighted_pick(rng, actions, weights):
    total = sum(weights[a] for a in actions)
    x = rng.random() * total
    acc = 0.0
    for a in actions:
        acc += weights[a]
        if x < acc:
            return a
    return actions[-1]


def build_menu(rng, engagement_weights) -> ActionMenu:
    """NONE plus two distinct actions drawn without replacement by weight."""
    a1 = _weighted_pick(rng, ACTIONS, engagement_weights)
    rest = tuple(a for a in ACTIONS if a != a1)
    a2 = _weighted_pick(rng, rest, engagement_weights)
    return ActionMenu(options=(NONE_ACTION, a1, a2))


def stub_choose(menu: ActionMenu, rng, engagement_weights, none_prob: float = 0.15) -> str:
    """Deterministic-model stand-in: NONE sometimes, else weight-proportional."""
    if rng.random() < none_prob:
        return NONE_ACTION
    a1, a2 = menu.options[1], menu.options[2]
    w1, w2 = engagement_weights[a1], engagement_weights[a2]
    return a1 if rng.random() * (w1 + w2) < w1 else a2


def _llm_choose(menu: ActionMenu, agent_id, round_index, platform, generator) -> str:
    rec = platform.agents[agent_id]
    spec = PromptSpec(
        kind="action_choice",
        persona=rec.persona,
        display_name=rec.display_name,
        menu=menu.options,
    )
    try:
        answer = generator.generate(
            build_prompt(spec), GenParams(kind="action_choice", agent_id=agent_id, round=round_index)
        )
    except GenerationError:
        return NONE_ACTION
    upper = answer.upper()
    for option in menu.options[1:]:
        if option.upper() in upper:
            return option
    return NONE_ACTION


# ---------------------------------------------------------------------------
# action execution
# ---------------------------------------------------------------------------


def sample_activations(population, rng, prob: float) -> list[int]:
    """Independently include each agent with the given probability."""
    return [a for a in sorted(population) if rng.random() < prob]


def _extract_mentions(text: str, platform: Platform, author: int) -> tuple[int, ...]:
    found = []
    for name in _MENTION_RE.findall(text):
        target = platform.resolve_display_name(name)
        if target is not None and target != author and target not in found:
            found.append(target)
    return tuple(found)


def _generate_comment(
    platform: Platform,
    generator,
    agent_id: int,
    round_index: int,
    context_items: list[tuple[str, str]],
    parent_author: int,
    topics: tuple[str, ...],
    kind: str,
) -> str:
    rec = platform.agents[agent_id]
    spec = PromptSpec(
        kind=kind,
        persona=rec.persona,
        display_name=rec.display_name,
        thread_items=tuple(context_items),
        topics=topics,
    )
    return generator.generate(
        build_prompt(spec),
        GenParams(
            kind=kind,
            agent_id=agent_id,
            round=round_index,
            parent_author=platform.display_name(parent_author),
            topics=topics,
        ),
    )


def _follow_decision(platform, generator, agent_id, round_index, target_author) -> bool:
    rec = platform.agents[agent_id]
    spec = PromptSpec(
        kind="follow_decision",
        persona=rec.persona,
        display_name=rec.display_name,
        thread_items=((platform.display_name(target_author), ""),),
    )
    try:
        answer = generator.generate(
            build_prompt(spec),
            GenParams(kind="follow_decision", agent_id=agent_id, round=round_index),
        )
    except GenerationError:
        return False
    return answer.strip().upper().startswith("YES")


def execute_action(
    action: str,
    agent_id: int,
    round_index: int,
    platform: Platform,
    config: SimConfig,
    generator,
    rng,
    catalog: LinkCatalog | None,
) -> None:
    """Run one chosen primitive through its fixed server pathway.

    Generator failures and empty slates degrade to a subject-less read so
    the run continues.
    """
    if action == NONE_ACTION:
        return
    rec = platform.agents[agent_id]

    if action == "post":
        interests = list(rec.interests)
        topics = tuple(rng.sample(interests, min(2, len(interests)))) if interests else ()
        spec = PromptSpec(
            kind="post", persona=rec.persona, display_name=rec.display_name, topics=topics
        )
        try:
            text = generator.generate(
                build_prompt(spec),
                GenParams(kind="post", agent_id=agent_id, round=round_index, topics=topics),
            )
            parsed = parse_post_output(text)
        except GenerationError:
            platform.log_read(agent_id, None)
            return
        platform.submit_post(agent_id, parsed.title, parsed.body, None, topics, round_index)
        return

    if action == "share_link":
        if catalog is None or not catalog.records:
            platform.log_read(agent_id, None)
            return
        link = sample_link(rng, rec.interests, catalog)
        spec = PromptSpec(
            kind="share_link_frame",
            persona=rec.persona,
            display_name=rec.display_name,
            article=link,
            topics=link.topics,
        )
        try:
            text = generator.generate(
                build_prompt(spec),
                GenParams(
                    kind="share_link_frame",
                    agent_id=agent_id,
                    round=round_index,
                    topics=link.topics,
                ),
            )
            parsed = parse_post_output(text)
        except GenerationError:
            platform.log_read(agent_id, None)
            return
        platform.submit_post(
            agent_id, parsed.title, parsed.body, link.url, link.topics, round_index
        )
        return

    if action == "comment":
        slate = platform.feed_slate(agent_id, round_index, config.slate_limit)
        if not slate:
            platform.log_read(agent_id, None)
            return
        chosen_post = slate[rng.randrange(len(slate))]
        items = platform.thread_items(chosen_post)[-config.thread_read_depth:]
        parent_id, parent_author, _ = items[-1]
        context = [(platform.display_name(a), t) for (_i, a, t) in items]
        root_topics = platform.posts[chosen_post].topics
        topics = root_topics or tuple(rec.interests[:2])
        try:
            text = _generate_comment(
                platform, generator, agent_id, round_index, context,
                parent_author, topics, "comment",
            )
        except GenerationError:
            platform.log_read(agent_id, None)
            return
        mentions = _extract_mentions(text, platform, agent_id)
        platform.submit_comment(agent_id, parent_id, text, mentions, round_index)
        if parent_author != agent_id and _follow_decision(
            platform, generator, agent_id, round_index, parent_author
        ):
            platform.follow(agent_id, parent_author)
        if root_topics:
            platform.update_interests(agent_id, root_topics)
        return

    if action == "read":
        slate = platform.feed_slate(agent_id, round_index, config.slate_limit)
        if not slate:
            platform.log_read(agent_id, None)
            return
        top = slate[0]
        platform.log_read(agent_id, top)
        if rng.random() < 0.5:
            topics = platform.posts[top].topics
            if topics:
                platform.update_interests(agent_id, topics)
        return

    if action == "search":
        platform.log_search(agent_id)
        results = platform.search_content(agent_id, config.slate_limit)
        if results:
            platform.log_read(agent_id, results[0])
        return

    raise ValueError(f"unknown action {action!r}")


def _serve_mention(platform, config, generator, agent_id, round_index) -> None:
    mention_id = platform.pop_mention(agent_id)
    if mention_id is None:
        return
    mention = platform.comments.get(mention_id)
    if mention is None:
        return
    all_items = platform.thread_items(mention.root)
    upto = [it for it in all_items if it[0] <= mention_id][-config.thread_read_depth:]
    context = [(platform.display_name(a), t) for (_i, a, t) in upto]
    topics = platform.posts[mention.root].topics or tuple(
        platform.agents[agent_id].interests[:2]
    )
    try:
        text = _generate_comment(
            platform, generator, agent_id, round_index, context,
            mention.author, topics, "mention_reply",
        )
    except GenerationError:
        return
    mentions = _extract_mentions(text, platform, agent_id)
    platform.submit_comment(
        agent_id, mention_id, text, mentions, round_index, event_type="mention_reply"
    )


def run_activation(
    agent_id: int,
    round_index: int,
    platform: Platform,
    config: SimConfig,
    generator,
    rng,
    catalog: LinkCatalog | None,
) -> None:
    """One free mention reply, then exactly ``budget`` menu-driven actions."""
    rec = platform.agents[agent_id]
    _serve_mention(platform, config, generator, agent_id, round_index)
    budget = rec.persona.budget if rec.persona is not None else 1
    for _ in range(budget):
        menu = build_menu(rng, config.engagement_weights)
        if generator.mode == "stub":
            action = stub_choose(menu, rng, config.engagement_weights, config.stub_none_prob)
        else:
            action = _llm_choose(menu, agent_id, round_index, platform, generator)
        execute_action(
            action, agent_id, round_index, platform, config, generator, rng, catalog
        )


def apply_churn_growth(day: int, platform: Platform, config: SimConfig, rng) -> tuple[int, int]:
    """End-of-day churn then growth.

    Removal targets the day's inactive agents, longest inactivity streak
    first (ties uniform); growth is relative to the pre-churn population.
    Floor rounding for both counts.
    """
    alive = platform.alive_agents()
    population_before = len(alive)
    inactive = [a for a in alive if platform.agents[a].last_action_day != day]
    n_remove = math.floor(config.churn_rate * len(inactive))
    victims = sorted(
        inactive,
        key=lambda a: (-(day - platform.agents[a].last_action_day), rng.random()),
    )[:n_remove]
    for victim in victims:
        platform.churn_agent(victim)
    n_add = math.floor(config.growth_rate * population_before)
    for _ in range(n_add):
        platform.register_agent(sample_persona(rng), day)
    return n_remove, n_add


def run_simulation(config: SimConfig, platform: Platform | None = None, generator=None):
    """Run the full simulation; returns the platform with its event log."""
    if config.seed is None:
        raise ConfigError("seed is required to run a simulation")
    rng = random.Random(config.seed)
    if platform is None:
        platform = Platform(
            visibility_window=config.visibility_window_rounds,
            slate_limit=config.slate_limit,
            thread_read_depth=config.thread_read_depth,
        )
    if generator is None:
        generator = build_generator(config)
    catalog = load_catalog_for(config)

    platform.note_round(0)
    for _ in range(config.starting_agents):
        platform.register_agent(sample_persona(rng), 0)

    for day in range(config.days):
        for hour in range(ROUNDS_PER_DAY):
            round_index = day * ROUNDS_PER_DAY + hour
            platform.note_round(round_index)
            prob = min(1.0, config.activation_prob_per_round * config.hourly_weights[hour])
            for agent_id in sample_activations(platform.alive_agents(), rng, prob):
                platform.log_activation(agent_id)
                run_activation(
                    agent_id, round_index, platform, config, generator, rng, catalog
                )
        platform.note_round(day * ROUNDS_PER_DAY + ROUNDS_PER_DAY - 1)
        apply_churn_growth(day, platform, config, rng)
    return platform
