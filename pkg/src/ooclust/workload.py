"""Transaction stream: 15 transaction kinds and their expansion into execution steps."""

from __future__ import annotations

import bisect
import itertools
import random
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import NamedTuple

from .errors import ConfigError, StateError
from .objectgraph import Family, ObjectGraph, Rel
from .storage import Mode


class TransactionKind(str, Enum):
    NAME_LOOKUP = "NameLookup"
    RANGE_LOOKUP = "RangeLookup"
    GROUP_LOOKUP_VERSIONS = "GroupLookupVersions"
    GROUP_LOOKUP_CONFIGURATION = "GroupLookupConfiguration"
    GROUP_LOOKUP_EQUIVALENCE = "GroupLookupEquivalence"
    REFERENCE_LOOKUP_VERSIONS = "ReferenceLookupVersions"
    REFERENCE_LOOKUP_CONFIGURATION = "ReferenceLookupConfiguration"
    SEQUENTIAL_SCAN = "SequentialScan"
    CLOSURE_VERSIONS = "ClosureVersions"
    CLOSURE_CONFIGURATION = "ClosureConfiguration"
    CLOSURE_EQUIVALENCE = "ClosureEquivalence"
    CLOSURE_RANDOM = "ClosureRandom"
    CREATE_VERSION = "CreateVersion"
    CREATE_COMPONENT = "CreateComponent"
    UPDATE_ATTRIBUTE = "UpdateAttribute"


K = TransactionKind
READ_KINDS = tuple(k for k in K if k not in (K.CREATE_VERSION, K.CREATE_COMPONENT, K.UPDATE_ATTRIBUTE))
CREATE_KINDS = (K.CREATE_VERSION, K.CREATE_COMPONENT)
# kinds that fetch whole class extents
EXTENT_KINDS = (K.RANGE_LOOKUP, K.SEQUENTIAL_SCAN)


def default_mix() -> dict[TransactionKind, float]:
    """Navigation mix: 80% reads, 15% creations, 5% updates.

    The ten navigational read kinds share the reads evenly. Extent reads (range
    lookup, sequential scan) are present with weight 0; a class extent costs
    hundreds of page reads, so even a 1% share would swamp every other effect.
    """
    mix = {k: 0.08 for k in READ_KINDS if k not in EXTENT_KINDS}
    mix[K.RANGE_LOOKUP] = 0.0
    mix[K.SEQUENTIAL_SCAN] = 0.0
    mix[K.CREATE_VERSION] = 0.075
    mix[K.CREATE_COMPONENT] = 0.075
    mix[K.UPDATE_ATTRIBUTE] = 0.05
    return mix


def uniform_read_mix() -> dict[TransactionKind, float]:
    """80% reads spread evenly over all 12 read kinds, 15% creations, 5% updates."""
    mix = {k: 0.8 / len(READ_KINDS) for k in READ_KINDS}
    mix[K.CREATE_VERSION] = 0.075
    mix[K.CREATE_COMPONENT] = 0.075
    mix[K.UPDATE_ATTRIBUTE] = 0.05
    return mix


def validate_mix(mix: dict) -> dict[TransactionKind, float]:
    out = {}
    for k, p in mix.items():
        try:
            kind = TransactionKind(k)
        except ValueError:
            raise ConfigError(f"unknown transaction kind {k!r}") from None
        if p < 0:
            raise ConfigError(f"negative mix weight for {kind.value}")
        out[kind] = float(p)
    total = sum(out.values())
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"mix probabilities sum to {total}, expected 1")
    return out


@dataclass
class WorkloadConfig:
    mix: dict = field(default_factory=default_mix)
    closure_depth: int = 3
    range_width: float = 0.1

    def validate(self) -> None:
        self.mix = validate_mix(self.mix)
        if self.closure_depth < 0:
            raise ConfigError("closure_depth must be >= 0")
        if not 0.0 < self.range_width <= 1.0:
            raise ConfigError("range_width must lie in (0, 1]")


_ids = itertools.count()


@dataclass
class Transaction:
    kind: TransactionKind
    start: int | None = None
    class_id: int | None = None
    lo: float = 0.0
    hi: float = 1.0
    depth: int = 0
    hop_families: tuple[Family, ...] = ()
    attr_index: int = 0
    new_value: float = 0.0
    arrival_time: float = 0.0
    completion_time: float | None = None
    id: int = field(default_factory=lambda: next(_ids))

    @property
    def response_time(self) -> float | None:
        if self.completion_time is None:
            return None
        return self.completion_time - self.arrival_time


class Op(IntEnum):
    SELECT = 0
    PAGE_NUMBER = 1
    ACCESS_PAGE = 2
    READ_ATTRS = 3
    UPDATE_ATTR = 4
    CREATE = 5
    PLACE = 6


# placeholder object id for "the object created by the preceding CREATE step"
NEW = -1


class Step(NamedTuple):
    """One execution step.

    ``SELECT`` carries ``via``/``family`` when the object was reached by
    following a relationship. ``ACCESS_PAGE`` names the object whose page is
    accessed; the page itself is resolved at execution time. ``CREATE`` stores
    ``(class_id, kind)`` in ``arg`` with the anchor as ``oid``.
    """

    op: Op
    oid: int
    mode: Mode | None = None
    via: int | None = None
    family: Family | None = None
    arg: object = None


class _Sampler:
    def __init__(self, mix: dict[TransactionKind, float]):
        self.kinds = [k for k in TransactionKind if mix.get(k, 0.0) > 0]
        self.cum = list(itertools.accumulate(mix[k] for k in self.kinds))

    def draw(self, rng: random.Random) -> TransactionKind:
        u = rng.random() * self.cum[-1]
        return self.kinds[min(bisect.bisect_right(self.cum, u), len(self.kinds) - 1)]


class TransactionGenerator:
    """Rule R1: draws transactions from the configured mix."""

    def __init__(self, config: WorkloadConfig, rng: random.Random):
        config.validate()
        self.config = config
        self.rng = rng
        self._sampler = _Sampler(config.mix)

    def next(self, graph: ObjectGraph, now: float = 0.0) -> Transaction:
        if not len(graph):
            raise StateError("cannot generate transactions on an empty graph")
        rng = self.rng
        kind = self._sampler.draw(rng)
        txn = Transaction(kind, arrival_time=now, depth=self.config.closure_depth)
        txn.start = rng.randrange(len(graph))
        txn.class_id = rng.randrange(len(graph.classes))
        w = self.config.range_width
        txn.lo = rng.random() * (1.0 - w)
        txn.hi = txn.lo + w
        if kind is K.CLOSURE_RANDOM:
            fams = (Family.VERSION, Family.CONFIGURATION, Family.EQUIVALENCE)
            txn.hop_families = tuple(rng.choice(fams) for _ in range(txn.depth))
        if kind is K.CREATE_VERSION:
            txn.class_id = graph.objects[txn.start].class_id
        if kind is K.UPDATE_ATTRIBUTE:
            txn.attr_index = rng.randrange(graph.class_def(graph.objects[txn.start].class_id).attr_count)
            txn.new_value = rng.random()
        return txn


def next_transaction(mix, graph: ObjectGraph, rng: random.Random, closure_depth: int = 3) -> Transaction:
    return TransactionGenerator(WorkloadConfig(dict(mix), closure_depth), rng).next(graph)


# --- traversals ------------------------------------------------------------

_FORWARD = {
    Family.VERSION: "version_children",
    Family.CONFIGURATION: "components",
    Family.EQUIVALENCE: "equivalents",
}


def descendants(graph: ObjectGraph, start: int, family: Family) -> list[tuple[int, int | None]]:
    """Breadth-first transitive walk along ``family``; (object, reached-from) pairs, start first."""
    attr = _FORWARD[family]
    out = [(start, None)]
    seen = {start}
    i = 0
    while i < len(out):
        cur = out[i][0]
        i += 1
        for n in getattr(graph.objects[cur], attr):
            if n not in seen:
                seen.add(n)
                out.append((n, cur))
    return out


def ancestors(graph: ObjectGraph, start: int, family: Family) -> list[tuple[int, int | None]]:
    """Start followed by the chain of version parents or composites."""
    attr = "version_parent" if family is Family.VERSION else "composite"
    out = [(start, None)]
    cur = start
    nxt = getattr(graph.objects[cur], attr)
    while nxt is not None:
        out.append((nxt, cur))
        cur = nxt
        nxt = getattr(graph.objects[cur], attr)
    return out


def closure(graph: ObjectGraph, start: int, families, depth: int) -> list[tuple[int, int | None, Family | None]]:
    """Depth-limited breadth-first walk; ``families[i]`` is followed at hop ``i``."""
    if depth < 0:
        raise ConfigError("closure depth must be >= 0")
    out = [(start, None, None)]
    seen = {start}
    frontier = [start]
    for level in range(depth):
        fam = families[level]
        attr = _FORWARD[fam]
        nxt = []
        for cur in frontier:
            for n in getattr(graph.objects[cur], attr):
                if n not in seen:
                    seen.add(n)
                    out.append((n, cur, fam))
                    nxt.append(n)
        frontier = nxt
        if not frontier:
            break
    return out


def _fetch(steps: list, oid: int, via=None, family=None, mode=Mode.READ) -> None:
    steps.append(Step(Op.SELECT, oid, via=via, family=family))
    steps.append(Step(Op.PAGE_NUMBER, oid))
    steps.append(Step(Op.ACCESS_PAGE, oid, mode=mode))
    steps.append(Step(Op.READ_ATTRS, oid))


_GROUP = {
    K.GROUP_LOOKUP_VERSIONS: Family.VERSION,
    K.GROUP_LOOKUP_CONFIGURATION: Family.CONFIGURATION,
}
_REFERENCE = {
    K.REFERENCE_LOOKUP_VERSIONS: Family.VERSION,
    K.REFERENCE_LOOKUP_CONFIGURATION: Family.CONFIGURATION,
}
_CLOSURE = {
    K.CLOSURE_VERSIONS: Family.VERSION,
    K.CLOSURE_CONFIGURATION: Family.CONFIGURATION,
    K.CLOSURE_EQUIVALENCE: Family.EQUIVALENCE,
}


def fetched_objects(txn: Transaction, graph: ObjectGraph) -> list[int]:
    """Objects a read transaction fetches, in fetch order."""
    return [s.oid for s in expand(txn, graph) if s.op is Op.SELECT]


def expand(txn: Transaction, graph: ObjectGraph) -> list[Step]:
    kind = txn.kind
    if txn.depth < 0:
        raise ConfigError("closure depth must be >= 0")
    steps: list[Step] = []
    if kind is K.NAME_LOOKUP:
        _fetch(steps, txn.start)
    elif kind is K.RANGE_LOOKUP:
        for oid in graph.instances(txn.class_id):
            if txn.lo <= graph.objects[oid].attributes[0] < txn.hi:
                _fetch(steps, oid)
    elif kind is K.SEQUENTIAL_SCAN:
        for oid in graph.instances(txn.class_id):
            _fetch(steps, oid)
    elif kind in _GROUP:
        fam = _GROUP[kind]
        for oid, via in descendants(graph, txn.start, fam):
            _fetch(steps, oid, via, fam if via is not None else None)
    elif kind is K.GROUP_LOOKUP_EQUIVALENCE:
        _fetch(steps, txn.start)
        for e in graph.objects[txn.start].equivalents:
            _fetch(steps, e, txn.start, Family.EQUIVALENCE)
    elif kind in _REFERENCE:
        fam = _REFERENCE[kind]
        for oid, via in ancestors(graph, txn.start, fam):
            _fetch(steps, oid, via, fam if via is not None else None)
    elif kind in _CLOSURE or kind is K.CLOSURE_RANDOM:
        fams = txn.hop_families if kind is K.CLOSURE_RANDOM else (_CLOSURE[kind],) * txn.depth
        for oid, via, fam in closure(graph, txn.start, fams, txn.depth):
            _fetch(steps, oid, via, fam)
    elif kind in CREATE_KINDS:
        rel = Rel.VERSION_CHILD if kind is K.CREATE_VERSION else Rel.CONFIG_COMPONENT
        _fetch(steps, txn.start)
        steps.append(Step(Op.CREATE, txn.start, arg=(txn.class_id, rel)))
        steps.append(Step(Op.PLACE, NEW))
        steps.append(Step(Op.ACCESS_PAGE, NEW, mode=Mode.WRITE))
    elif kind is K.UPDATE_ATTRIBUTE:
        steps.append(Step(Op.SELECT, txn.start))
        steps.append(Step(Op.PAGE_NUMBER, txn.start))
        steps.append(Step(Op.ACCESS_PAGE, txn.start, mode=Mode.WRITE))
        steps.append(Step(Op.UPDATE_ATTR, txn.start, arg=txn.attr_index))
    else:
        raise ConfigError(f"unknown transaction kind {kind}")
    return steps
