"""Clustering policies: Null (sequential baseline), Cactis, ORION and CK.

All policies share one callback interface driven by the engine:

* ``load()`` places the initial database (no I/O is charged),
* ``on_object_created(oid)`` places a new object and returns its page,
* ``on_object_accessed`` / ``on_relationship_traversed`` feed usage statistics,
* ``maybe_reorganize(now)`` is called once per completed transaction and
  returns a :class:`ReorgReport` when a reorganization ran.

Placing an object charges one synchronous clustering write for the receiving
page. Anything else a policy reads or rewrites is charged as clustering I/O too.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field

from .errors import CapacityError, ConfigError, StateError
from .objectgraph import FAMILY_OF, Family, ObjectGraph, Rel
from .storage import Mode, PageStore, Purpose

POLICY_NAMES = ("null", "cactis", "orion", "ck")

_FAMILY_RANK = {Family.VERSION: 0, Family.CONFIGURATION: 1, Family.EQUIVALENCE: 2}


@dataclass
class PolicyConfig:
    name: str = "null"
    reorg_interval: int = 15
    cactis_fill_factor: float = 0.75
    orion_read_passes: int = 4
    orion_periodic: bool = True
    cluster_directives: list[list] = field(default_factory=list)
    ck_lambda: float = 0.1

    def validate(self) -> None:
        if self.name not in POLICY_NAMES:
            raise ConfigError(f"unknown policy {self.name!r}; expected one of {', '.join(POLICY_NAMES)}")
        if self.reorg_interval < 1:
            raise ConfigError("reorg_interval must be >= 1")
        if not 0.0 < self.cactis_fill_factor <= 1.0:
            raise ConfigError("cactis_fill_factor must lie in (0, 1]")
        if self.orion_read_passes < 0:
            raise ConfigError("orion_read_passes must be >= 0")
        if self.ck_lambda < 0:
            raise ConfigError("ck_lambda must be >= 0")
        for d in self.cluster_directives:
            if not d:
                raise ConfigError("empty class list in cluster directive")


@dataclass(frozen=True)
class ReorgReport:
    policy: str
    time: float
    reads: int
    writes: int
    pages_before: int
    pages_after: int

    @property
    def io_count(self) -> int:
        return self.reads + self.writes


class ClusteringPolicy:
    name = "null"

    def __init__(self, graph: ObjectGraph, store: PageStore, config: PolicyConfig | None = None):
        self.graph = graph
        self.store = store
        self.config = config or PolicyConfig(name=self.name)
        self.reorganizations: list[ReorgReport] = []

    # -- callbacks ----------------------------------------------------------

    def load(self) -> None:
        for o in self.graph.objects:
            self.place_initial(o.id)

    def place_initial(self, oid: int) -> int:
        pid = self.choose_page(oid, charge=False)
        self.store.place_object(oid, pid, self.graph.objects[oid].size_bytes)
        return pid

    def on_object_created(self, oid: int) -> int:
        pid = self.choose_page(oid, charge=True)
        self.store.place_object(oid, pid, self.graph.objects[oid].size_bytes)
        self.store.charge(Purpose.CLUSTERING, writes=1)
        return pid

    def on_object_accessed(self, oid: int) -> None:
        pass

    def on_relationship_traversed(self, src: int, dst: int, family: Family) -> None:
        pass

    def maybe_reorganize(self, now: float) -> ReorgReport | None:
        return None

    # -- helpers ------------------------------------------------------------

    def choose_page(self, oid: int, charge: bool) -> int:
        return sequential_page(self.store, self.graph.objects[oid].size_bytes)

    def check_conservation(self) -> None:
        placed = sum(len(p.residents) for p in self.store.pages.values())
        if placed != len(self.graph) or self.store.placed_count != len(self.graph):
            raise StateError(f"{placed} objects on pages, {len(self.graph)} in the database")


def sequential_page(store: PageStore, size: int, segment: int | None = None) -> int:
    """Last allocated page if the object fits, else a fresh one."""
    pid = store.last_page
    if pid is not None and pid in store.pages and store.pages[pid].segment == segment and store.fits(pid, size):
        return pid
    return store.allocate_page(segment)


class NullPolicy(ClusteringPolicy):
    """Placement in creation order, no statistics, never reorganizes."""

    name = "null"


def null_place(store: PageStore, size: int) -> int:
    return sequential_page(store, size)


# --------------------------------------------------------------------------
# Cactis
# --------------------------------------------------------------------------


def pair_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def cactis_greedy_pack(
    sizes: dict[int, int],
    access_count: dict[int, int],
    traversal_count: dict[tuple[int, int], int],
    page_capacity: int,
    fill_factor: float = 1.0,
) -> dict[int, int]:
    """Pack objects into pages (numbered from 0) by usage statistics.

    A page is seeded with the hottest unplaced object (ties: lowest id). It then
    grows with the unplaced object having the largest total traversal count to
    the objects already on it (ties: higher access count, then lowest id). When
    no candidate has positive affinity, remaining room is filled in access-count
    order. Pages are filled up to ``fill_factor * page_capacity``.
    """
    limit = int(page_capacity * fill_factor)
    for oid, s in sizes.items():
        if s > page_capacity:
            raise CapacityError(f"object {oid} ({s} B) exceeds page capacity {page_capacity} B")
    adj: dict[int, dict[int, int]] = defaultdict(dict)
    for (a, b), w in traversal_count.items():
        if w > 0 and a != b and a in sizes and b in sizes:
            adj[a][b] = adj[a].get(b, 0) + w
            adj[b][a] = adj[b].get(a, 0) + w

    order = sorted(sizes, key=lambda o: (-access_count.get(o, 0), o))
    smallest = min(sizes.values(), default=0)
    placed: dict[int, int] = {}
    cursor = 0
    page = -1
    while len(placed) < len(sizes):
        while order[cursor] in placed:
            cursor += 1
        seed = order[cursor]
        page += 1
        placed[seed] = page
        used = sizes[seed]
        frontier: dict[int, int] = {}

        def absorb(o):
            for n, w in adj.get(o, {}).items():
                if n not in placed:
                    frontier[n] = frontier.get(n, 0) + w

        absorb(seed)
        while used + smallest <= limit:
            best = None
            best_key = None
            for cand, aff in frontier.items():
                if used + sizes[cand] <= limit:
                    key = (aff, access_count.get(cand, 0), -cand)
                    if best_key is None or key > best_key:
                        best, best_key = cand, key
            if best is None:
                # zero-affinity fill in access-count order
                while cursor < len(order) and order[cursor] in placed:
                    cursor += 1
                for i in range(cursor, len(order)):
                    o = order[i]
                    if o not in placed and used + sizes[o] <= limit:
                        best = o
                        break
            if best is None:
                break
            placed[best] = page
            used += sizes[best]
            frontier.pop(best, None)
            absorb(best)
    return placed


def colocated_weight(assignment: dict[int, int], traversal_count: dict[tuple[int, int], int]) -> int:
    """Total traversal count over object pairs that share a page."""
    return sum(
        w for (a, b), w in traversal_count.items()
        if a in assignment and b in assignment and assignment[a] == assignment[b]
    )


def random_packing(sizes: dict[int, int], page_capacity: int, rng: random.Random) -> dict[int, int]:
    """Sequential fill of a random permutation; the baseline for packing quality."""
    order = list(sizes)
    rng.shuffle(order)
    out, page, used = {}, 0, 0
    for o in order:
        if used and used + sizes[o] > page_capacity:
            page += 1
            used = 0
        out[o] = page
        used += sizes[o]
    return out


def groups_from_assignment(assignment: dict[int, int]) -> list[list[int]]:
    n = max(assignment.values()) + 1 if assignment else 0
    groups: list[list[int]] = [[] for _ in range(n)]
    for oid, p in assignment.items():
        groups[p].append(oid)
    return groups


class CactisPolicy(ClusteringPolicy):
    """Usage-statistics clustering with periodic whole-database repacking.

    Repacking leaves ``1 - fill_factor`` of each page free; objects created
    between reorganizations go to a relative's page while that slack lasts.
    """

    name = "cactis"

    def __init__(self, graph, store, config=None):
        super().__init__(graph, store, config)
        self.access_count: dict[int, int] = defaultdict(int)
        self.traversal_count: dict[tuple[int, int], int] = defaultdict(int)
        self.last_reorg = 0.0
        self._since_reorg = 0
        self._growth_page: int | None = None

    def load(self) -> None:
        sizes = {o.id: o.size_bytes for o in self.graph.objects}
        packing = cactis_greedy_pack(sizes, {}, {}, self.store.page_bytes, self.config.cactis_fill_factor)
        for group in groups_from_assignment(packing):
            pid = self.store.allocate_page()
            for oid in group:
                self.store.place_object(oid, pid, sizes[oid])

    def choose_page(self, oid, charge):
        size = self.graph.objects[oid].size_bytes
        for rel, _ in self.graph.direct_relatives(oid):
            if self.store.is_placed(rel):
                pid = self.store.lookup_page(rel)
                if self.store.fits(pid, size):
                    return pid
        gp = self._growth_page
        if gp is not None and gp in self.store.pages and self.store.fits(gp, size):
            return gp
        self._growth_page = self.store.allocate_page()
        return self._growth_page

    def on_object_accessed(self, oid):
        self.access_count[oid] += 1

    def on_relationship_traversed(self, src, dst, family):
        self.traversal_count[pair_key(src, dst)] += 1

    def pack(self) -> dict[int, int]:
        sizes = {o.id: o.size_bytes for o in self.graph.objects}
        return cactis_greedy_pack(
            sizes, self.access_count, self.traversal_count,
            self.store.page_bytes, self.config.cactis_fill_factor,
        )

    def maybe_reorganize(self, now):
        self._since_reorg += 1
        if self._since_reorg < self.config.reorg_interval:
            return None
        return self.reorganize(now)

    def reorganize(self, now: float) -> ReorgReport:
        store = self.store
        before = store.pages_used()
        old = list(store.pages)
        groups = groups_from_assignment(self.pack())
        store.replace_pages(old, groups)
        after = len(groups)
        store.charge(Purpose.CLUSTERING, reads=before, writes=after)
        self._growth_page = None
        self._since_reorg = 0
        self.last_reorg = now
        self.check_conservation()
        report = ReorgReport(self.name, now, before, after, before, after)
        self.reorganizations.append(report)
        return report


# --------------------------------------------------------------------------
# ORION
# --------------------------------------------------------------------------


class OrionPolicy(ClusteringPolicy):
    """One segment per class (or per merged class list); periodic segment rewrites."""

    name = "orion"

    def __init__(self, graph, store, config=None):
        super().__init__(graph, store, config)
        self.class_segment: dict[int, int] = {}
        self._since_reorg = 0
        self.last_reorg = 0.0
        for directive in self.config.cluster_directives:
            self.cluster_message(directive)

    def _class_id(self, c) -> int:
        if isinstance(c, int):
            if not 0 <= c < len(self.graph.classes):
                raise ConfigError(f"unknown class id {c}")
            return c
        for cd in self.graph.classes:
            if cd.name == c:
                return cd.id
        raise ConfigError(f"unknown class name {c!r}")

    def segment_of(self, class_id: int) -> int:
        sid = self.class_segment.get(class_id)
        if sid is None:
            sid = self.store.create_segment([class_id])
            self.class_segment[class_id] = sid
        return sid

    def choose_page(self, oid, charge):
        o = self.graph.objects[oid]
        sid = self.segment_of(o.class_id)
        pages = self.store.segments[sid].pages
        if pages and self.store.fits(pages[-1], o.size_bytes):
            return pages[-1]
        return self.store.allocate_page(sid)

    def _rewrite(self, sids, new_sid: int | None, now: float) -> ReorgReport:
        """Rewrite the given segments' objects sequentially, in id order."""
        store = self.store
        old = [pid for sid in sids for pid in store.segments[sid].pages]
        before = sum(1 for pid in old if store.pages[pid].residents)
        rewrite_plan = []
        for sid in sids:
            target = new_sid if new_sid is not None else sid
            oids = sorted(o for pid in store.segments[sid].pages for o in store.pages[pid].residents)
            rewrite_plan.append((target, oids))
        if new_sid is not None:
            merged = sorted(o for _, oids in rewrite_plan for o in oids)
            rewrite_plan = [(new_sid, merged)]
        after = 0
        for target, oids in rewrite_plan:
            groups, cur, used = [], [], 0
            for oid in oids:
                size = self.graph.objects[oid].size_bytes
                if cur and used + size > store.page_bytes:
                    groups.append(cur)
                    cur, used = [], 0
                cur.append(oid)
                used += size
            if cur:
                groups.append(cur)
            store.replace_pages([], groups, segment=target)
            after += len(groups)
        for pid in old:
            store.drop_page(pid)
        reads = self.config.orion_read_passes * before
        store.charge(Purpose.CLUSTERING, reads=reads, writes=after)
        report = ReorgReport(self.name, now, reads, after, before, after)
        self.reorganizations.append(report)
        return report

    def cluster_message(self, class_names, now: float = 0.0) -> ReorgReport:
        """Merge the listed classes' segments into one shared segment."""
        if not class_names:
            raise ConfigError("cluster message needs at least one class")
        cids = sorted({self._class_id(c) for c in class_names})
        old_sids = sorted({self.class_segment[c] for c in cids if c in self.class_segment})
        classes = set(cids)
        for sid in old_sids:
            classes |= self.store.segments[sid].classes
        new_sid = self.store.create_segment(classes)
        report = self._rewrite(old_sids, new_sid, now)
        for sid in old_sids:
            del self.store.segments[sid]
        for c in classes:
            self.class_segment[c] = new_sid
        return report

    def maybe_reorganize(self, now):
        if not self.config.orion_periodic:
            return None
        self._since_reorg += 1
        if self._since_reorg < self.config.reorg_interval:
            return None
        return self.reorganize(now)

    def reorganize(self, now: float) -> ReorgReport:
        sids = sorted(set(self.class_segment.values()))
        report = self._rewrite(sids, None, now)
        self._since_reorg = 0
        self.last_reorg = now
        self.check_conservation()
        return report


# --------------------------------------------------------------------------
# CK
# --------------------------------------------------------------------------


def ck_score(graph: ObjectGraph, new_oid: int, kind: Rel, lam: float) -> float:
    spec = graph.class_def(graph.objects[new_oid].class_id).freq_spec
    score = spec.freq(FAMILY_OF[kind])
    if kind is Rel.VERSION_PARENT:
        score += lam * spec.inherited_attr_count
    return score


def ck_candidates(graph: ObjectGraph, store: PageStore, new_oid: int, lam: float) -> list[tuple[float, int, int]]:
    """Placed direct relatives as (score, relative, page), best first."""
    ranked = []
    for rel, kind in graph.direct_relatives(new_oid):
        if not store.is_placed(rel):
            continue
        s = ck_score(graph, new_oid, kind, lam)
        ranked.append((-s, _FAMILY_RANK[FAMILY_OF[kind]], rel, s))
    ranked.sort()
    return [(s, rel, store.lookup_page(rel)) for _, _, rel, s in ranked]


def ck_choose_page(graph: ObjectGraph, store: PageStore, new_oid: int, lam: float = 0.1, charge: bool = True) -> int:
    """Page of the best-scoring relative that still has room, else a fresh page.

    Each distinct candidate page is inspected (through the buffer, as clustering
    I/O when ``charge``) until one fits.
    """
    size = graph.objects[new_oid].size_bytes
    seen = set()
    for _, _, pid in ck_candidates(graph, store, new_oid, lam):
        if pid in seen:
            continue
        seen.add(pid)
        if charge:
            store.access_page(pid, Purpose.CLUSTERING, Mode.READ)
        if store.fits(pid, size):
            return pid
    return store.allocate_page()


class CkPolicy(ClusteringPolicy):
    """Creation-time placement near the most strongly related object; no reorganization."""

    name = "ck"

    def choose_page(self, oid, charge):
        return ck_choose_page(self.graph, self.store, oid, self.config.ck_lambda, charge=charge)


_POLICIES = {"null": NullPolicy, "cactis": CactisPolicy, "orion": OrionPolicy, "ck": CkPolicy}


def make_policy(graph: ObjectGraph, store: PageStore, config: PolicyConfig) -> ClusteringPolicy:
    config.validate()
    return _POLICIES[config.name](graph, store, config)
