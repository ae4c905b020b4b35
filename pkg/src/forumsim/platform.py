"""Authoritative platform state: agents, posts, comments, follows, feeds.

Single-writer: all mutations happen from the scheduler's thread of control
in event-sequence order. Every mutation appends to the event log; a log can
be replayed to rebuild the event-derived state (content, follows, mention
queues) for verification.

Time is measured in rounds (one simulated hour); ``day = round // 24``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .events import COMMENT_EVENT_TYPES, EventRecord
from .personas import INTEREST_CATALOG, Persona

ROUNDS_PER_DAY = 24
DEFAULT_VISIBILITY_WINDOW = 180
DEFAULT_SLATE_LIMIT = 10
DEFAULT_THREAD_READ_DEPTH = 3
INTEREST_CAP = 10


class PlatformError(ValueError):
    """Invalid platform operation (unknown ids, dangling parents, self-follow)."""


@dataclass
class AgentRecord:
    agent_id: int
    persona: Persona | None
    display_name: str
    interests: list[str]
    joined_day: int
    alive: bool = True
    churned_day: int | None = None
    last_active_round: int | None = None
    last_action_day: int = -1
    pending_mentions: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class PostRecord:
    post_id: int
    author: int
    round: int
    title: str
    body: str
    url: str | None
    topics: tuple[str, ...]

    @property
    def kind(self) -> str:
        return "link" if self.url else "text"


@dataclass(frozen=True)
class CommentRecord:
    comment_id: int
    author: int
    parent: int
    root: int
    round: int
    body: str
    mentions: tuple[int, ...]


class Platform:
    def __init__(
        self,
        visibility_window: int = DEFAULT_VISIBILITY_WINDOW,
        slate_limit: int = DEFAULT_SLATE_LIMIT,
        thread_read_depth: int = DEFAULT_THREAD_READ_DEPTH,
    ):
        self.visibility_window = visibility_window
        self.slate_limit = slate_limit
        self.thread_read_depth = thread_read_depth
        self.agents: dict[int, AgentRecord] = {}
        self.posts: dict[int, PostRecord] = {}
        self.comments: dict[int, CommentRecord] = {}
        self.follows: set[tuple[int, int]] = set()
        self.events: list[EventRecord] = []
        self.current_round = 0
        self._next_agent_id = 0
        self._next_item_id = 0
        self._next_seq = 1
        self._names: dict[str, int] = {}
        # comment ids per root post, in creation order
        self._threads: dict[int, list[int]] = {}

    # ------------------------------------------------------------------
    # clock & logging
    # ------------------------------------------------------------------

    def note_round(self, round_index: int) -> None:
        """Advance the platform clock; events are stamped with it."""
        if round_index < self.current_round:
            raise PlatformError("clock may not move backwards")
        self.current_round = round_index

    def _log(self, type: str, agent: int | None = None, **fields) -> EventRecord:
        ev = EventRecord(
            seq=self._next_seq,
            day=self.current_round // ROUNDS_PER_DAY,
            round=self.current_round,
            type=type,
            agent=agent,
            **fields,
        )
        self._next_seq += 1
        self.events.append(ev)
        # "activate" marks the day for churn: an agent sampled this day is
        # not inactive even if every menu choice was NONE.
        if agent is not None and type in (
            "activate", "post", "comment", "mention_reply", "read", "search", "follow"
        ):
            rec = self.agents[agent]
            rec.last_action_day = max(rec.last_action_day, ev.day)
            if rec.last_active_round is None or ev.round > rec.last_active_round:
                rec.last_active_round = ev.round
        return ev

    # ------------------------------------------------------------------
    # agents
    # ------------------------------------------------------------------

    def register_agent(self, persona: Persona | None, day: int) -> int:
        agent_id = self._next_agent_id
        self._next_agent_id += 1
        name = persona.name if persona is not None else f"user{agent_id}"
        display = name
        suffix = 2
        while display in self._names:
            display = f"{name}{suffix}"
            suffix += 1
        self._names[display] = agent_id
        interests = list(persona.interests) if persona is not None else []
        self.agents[agent_id] = AgentRecord(
            agent_id=agent_id,
            persona=persona,
            display_name=display,
            interests=interests,
            joined_day=day,
            last_action_day=day - 1,
        )
        self._log("join", agent=agent_id)
        return agent_id

    def churn_agent(self, agent_id: int) -> None:
        rec = self._agent(agent_id)
        if not rec.alive:
            return
        rec.alive = False
        rec.churned_day = self.current_round // ROUNDS_PER_DAY
        rec.pending_mentions.clear()
        self._log("churn", agent=agent_id)

    def alive_agents(self) -> list[int]:
        return sorted(a for a, rec in self.agents.items() if rec.alive)

    def resolve_display_name(self, name: str) -> int | None:
        return self._names.get(name)

    def display_name(self, agent_id: int) -> str:
        return self._agent(agent_id).display_name

    def _agent(self, agent_id: int) -> AgentRecord:
        try:
            return self.agents[agent_id]
        except KeyError:
            raise PlatformError(f"unknown agent {agent_id}") from None

    # ------------------------------------------------------------------
    # content
    # ------------------------------------------------------------------

    def submit_post(
        self,
        author: int,
        title: str,
        body: str,
        url: str | None,
        topics: tuple[str, ...],
        round: int,
    ) -> int:
        self._agent(author)
        if not title:
            raise PlatformError("post title must be non-empty")
        post_id = self._next_item_id
        self._next_item_id += 1
        rec = PostRecord(
            post_id=post_id,
            author=author,
            round=round,
            title=title,
            body=body,
            url=url,
            topics=tuple(topics),
        )
        self.posts[post_id] = rec
        self._threads[post_id] = []
        self._log(
            "post",
            agent=author,
            post_id=post_id,
            title=title,
            text=body,
            url=url,
            topics=tuple(topics),
        )
        return post_id

    def submit_comment(
        self,
        author: int,
        parent_ref: int,
        body: str,
        mentions: tuple[int, ...],
        round: int,
        event_type: str = "comment",
    ) -> int:
        if event_type not in COMMENT_EVENT_TYPES:
            raise PlatformError(f"bad comment event type {event_type!r}")
        self._agent(author)
        if parent_ref in self.posts:
            root = parent_ref
        elif parent_ref in self.comments:
            root = self.comments[parent_ref].root
        else:
            raise PlatformError(f"dangling parent {parent_ref}")
        # keep only resolvable, non-self mentions
        kept = tuple(m for m in dict.fromkeys(mentions) if m in self.agents and m != author)
        comment_id = self._next_item_id
        self._next_item_id += 1
        rec = CommentRecord(
            comment_id=comment_id,
            author=author,
            parent=parent_ref,
            root=root,
            round=round,
            body=body,
            mentions=kept,
        )
        self.comments[comment_id] = rec
        self._threads[root].append(comment_id)
        for m in kept:
            target = self.agents[m]
            if target.alive:
                target.pending_mentions.append(comment_id)
        self._log(
            event_type,
            agent=author,
            comment_id=comment_id,
            parent_id=parent_ref,
            root_id=root,
            text=body,
            mentions=kept,
        )
        return comment_id

    # ------------------------------------------------------------------
    # reads, feeds, search
    # ------------------------------------------------------------------

    def feed_slate(self, agent: int, round: int, limit: int | None = None) -> list[int]:
        """Reverse-chronological slate within the visibility window.

        Excludes the querying agent's own posts; ties in round broken by
        descending post id.
        """
        self._agent(agent)
        limit = self.slate_limit if limit is None else limit
        horizon = round - self.visibility_window
        eligible = [
            p.post_id
            for p in self.posts.values()
            if p.round >= horizon and p.author != agent
        ]
        eligible.sort(key=lambda pid: (-self.posts[pid].round, -pid))
        return eligible[:limit]

    def search_content(self, agent: int, limit: int | None = None) -> list[int]:
        """Interest-matching posts over the entire store, newest first."""
        rec = self._agent(agent)
        limit = self.slate_limit if limit is None else limit
        wanted = set(rec.interests)
        hits = [
            p.post_id for p in self.posts.values() if wanted.intersection(p.topics)
        ]
        hits.sort(key=lambda pid: (-self.posts[pid].round, -pid))
        return hits[:limit]

    def thread_items(self, item_ref: int) -> list[tuple[int, int, str]]:
        """All items of the thread containing ``item_ref``.

        Returns (item_id, author, text) triples in chronological order; the
        root post is item 0.
        """
        if item_ref in self.posts:
            root = item_ref
        elif item_ref in self.comments:
            root = self.comments[item_ref].root
        else:
            raise PlatformError(f"unknown item {item_ref}")
        post = self.posts[root]
        items = [(root, post.author, post.body or post.title)]
        for cid in self._threads[root]:
            c = self.comments[cid]
            items.append((cid, c.author, c.body))
        return items

    def thread_context(self, item_ref: int, k: int | None = None) -> list[tuple[str, str]]:
        """The K most recent items of the thread, oldest-to-newest."""
        k = self.thread_read_depth if k is None else k
        items = self.thread_items(item_ref)[-k:]
        return [(self.display_name(author), text) for (_iid, author, text) in items]

    def log_read(self, agent: int, post_id: int | None) -> None:
        self._agent(agent)
        if post_id is not None and post_id not in self.posts:
            raise PlatformError(f"unknown post {post_id}")
        self._log("read", agent=agent, post_id=post_id)

    def log_search(self, agent: int) -> None:
        self._agent(agent)
        self._log("search", agent=agent)

    def log_activation(self, agent: int) -> None:
        self._agent(agent)
        self._log("activate", agent=agent)

    # ------------------------------------------------------------------
    # mentions, follows, interests
    # ------------------------------------------------------------------

    def pop_mention(self, agent: int) -> int | None:
        rec = self._agent(agent)
        if not rec.pending_mentions:
            return None
        return rec.pending_mentions.pop()

    def follow(self, agent: int, author: int) -> None:
        self._agent(agent)
        self._agent(author)
        if agent == author:
            raise PlatformError("self-follow rejected")
        edge = (agent, author)
        if edge in self.follows:
            return
        self.follows.add(edge)
        self._log("follow", agent=agent, followee=author)

    def update_interests(self, agent: int, topics) -> None:
        rec = self._agent(agent)
        unknown = set(topics) - set(INTEREST_CATALOG)
        if unknown:
            raise PlatformError(f"topics not in catalog: {sorted(unknown)}")
        for t in topics:
            if t not in rec.interests:
                rec.interests.append(t)
        while len(rec.interests) > INTEREST_CAP:
            rec.interests.pop(0)  # evict oldest-added

    # ------------------------------------------------------------------
    # derived state & replay
    # ------------------------------------------------------------------

    def content_state(self) -> dict:
        """Event-derived state, comparable across a run and its replay."""
        return {
            "agents": {
                a: (rec.joined_day, rec.alive, rec.churned_day, rec.last_active_round)
                for a, rec in self.agents.items()
            },
            "posts": dict(self.posts),
            "comments": dict(self.comments),
            "follows": set(self.follows),
            "mentions": {
                a: tuple(rec.pending_mentions) for a, rec in self.agents.items()
            },
        }

    @classmethod
    def replay(cls, events, **kwargs) -> "Platform":
        """Rebuild event-derived platform state from a log.

        Personas and interest sets are seeded state, not event payloads, so
        replayed agents carry no persona; everything content-shaped (posts,
        comments, threads, follows, mention queues, liveness) is restored
        exactly.
        """
        pf = cls(**kwargs)
        for ev in events:
            pf.note_round(ev.round)
            if ev.type == "join":
                pf._next_agent_id = ev.agent
                pf.register_agent(None, ev.day)
            elif ev.type == "churn":
                pf.churn_agent(ev.agent)
            elif ev.type == "post":
                pf._next_item_id = ev.post_id
                pf.submit_post(
                    ev.agent, ev.title, ev.text or "", ev.url, ev.topics or (), ev.round
                )
            elif ev.type in COMMENT_EVENT_TYPES:
                pf._next_item_id = ev.comment_id
                pf.submit_comment(
                    ev.agent,
                    ev.parent_id,
                    ev.text or "",
                    ev.mentions or (),
                    ev.round,
                    event_type=ev.type,
                )
                if ev.type == "mention_reply":
                    # the reply answers the mention it was popped for
                    replier = pf.agents[ev.agent]
                    if ev.parent_id in replier.pending_mentions:
                        replier.pending_mentions.remove(ev.parent_id)
            elif ev.type == "read":
                pf.log_read(ev.agent, ev.post_id)
            elif ev.type == "search":
                pf.log_search(ev.agent)
            elif ev.type == "activate":
                pf.log_activation(ev.agent)
            elif ev.type == "follow":
                pf.follow(ev.agent, ev.followee)
        return pf
