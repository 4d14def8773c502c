"""Synthetic object database: classes, objects and the three structural relationships.

Objects are numbered densely from 0 in creation order. Every object may have one
version parent, one composite, any number of version children and components,
and a symmetric set of equivalent objects. Neighbor lists are kept in ascending
id order so traversals are reproducible.
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConfigError, StateError, UnknownObjectError


class Rel(str, Enum):
    """Direction-aware relationship kinds as seen from one object."""

    VERSION_CHILD = "version-child"
    VERSION_PARENT = "version-parent"
    CONFIG_COMPONENT = "configuration-component"
    CONFIG_COMPOSITE = "configuration-composite"
    EQUIVALENCE = "equivalence"


class Family(str, Enum):
    """The three structural relationships, direction ignored."""

    VERSION = "version"
    CONFIGURATION = "configuration"
    EQUIVALENCE = "equivalence"


FAMILY_OF = {
    Rel.VERSION_CHILD: Family.VERSION,
    Rel.VERSION_PARENT: Family.VERSION,
    Rel.CONFIG_COMPONENT: Family.CONFIGURATION,
    Rel.CONFIG_COMPOSITE: Family.CONFIGURATION,
    Rel.EQUIVALENCE: Family.EQUIVALENCE,
}

# kinds accepted by create_object: the new object becomes anchor's <kind>
CREATE_KINDS = (Rel.VERSION_CHILD, Rel.CONFIG_COMPONENT, Rel.EQUIVALENCE)


@dataclass(frozen=True)
class CkFrequencySpec:
    """Per-class access hints used by CK placement."""

    freq_version: float = 0.6
    freq_configuration: float = 0.3
    freq_equivalence: float = 0.1
    inherited_attr_count: int = 2

    def freq(self, family: Family) -> float:
        if family is Family.VERSION:
            return self.freq_version
        if family is Family.CONFIGURATION:
            return self.freq_configuration
        return self.freq_equivalence


@dataclass(frozen=True)
class ClassDef:
    id: int
    name: str
    attr_count: int
    freq_spec: CkFrequencySpec

    def __post_init__(self):
        if self.attr_count < 1:
            raise ConfigError(f"class {self.name}: attr_count must be >= 1")
        fs = self.freq_spec
        for w in (fs.freq_version, fs.freq_configuration, fs.freq_equivalence):
            if not 0.0 <= w <= 1.0:
                raise ConfigError(f"class {self.name}: frequency {w} outside [0, 1]")
        if not 0 <= fs.inherited_attr_count <= self.attr_count:
            raise ConfigError(f"class {self.name}: inherited_attr_count exceeds attr_count")


@dataclass
class DbObject:
    id: int
    class_id: int
    attributes: list[float]
    size_bytes: int
    version_parent: int | None = None
    version_children: list[int] = field(default_factory=list)
    composite: int | None = None
    components: list[int] = field(default_factory=list)
    equivalents: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class DatabaseSpec:
    """Parameters of the synthetic database generator.

    The database is a sequence of composite objects, each a tree of
    configuration links ``config_depth`` levels deep whose inner nodes have on
    average ``config_fanout`` components. Objects are numbered depth-first, so a
    composite occupies a contiguous id range. With probability
    ``version_fraction`` an object also gets a subtree of alternative versions
    (about ``version_branching`` per level), generated right after it; a version
    of a component joins the same composite.
    """

    initial_objects: int = 1000
    class_count: int = 30
    version_branching: float = 2.0
    config_fanout: float = 3.0
    config_depth: int = 4
    version_fraction: float = 0.4
    equivalence_prob: float = 0.02
    object_size_bytes: int = 128
    attr_count_per_class: int = 4
    freq_version: float = 0.6
    freq_configuration: float = 0.3
    freq_equivalence: float = 0.1
    inherited_attr_count: int = 2
    seed: int = 0

    def validate(self) -> None:
        if self.initial_objects < 1:
            raise ConfigError("initial_objects must be >= 1")
        if self.class_count < 1:
            raise ConfigError("class_count must be >= 1")
        if self.version_branching < 0 or self.config_fanout < 0:
            raise ConfigError("branching parameters must be >= 0")
        if self.config_depth < 0:
            raise ConfigError("config_depth must be >= 0")
        for name in ("equivalence_prob", "version_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.object_size_bytes <= 0:
            raise ConfigError("object_size_bytes must be > 0")
        if self.attr_count_per_class < 1:
            raise ConfigError("attr_count_per_class must be >= 1")

    def freq_spec(self) -> CkFrequencySpec:
        return CkFrequencySpec(
            self.freq_version,
            self.freq_configuration,
            self.freq_equivalence,
            self.inherited_attr_count,
        )


class ObjectGraph:
    """The object database of one simulation run."""

    def __init__(self, classes: list[ClassDef], rng: random.Random | None = None):
        if not classes:
            raise ConfigError("at least one class is required")
        self.classes = list(classes)
        self.objects: list[DbObject] = []
        self._instances: dict[int, list[int]] = {c.id: [] for c in classes}
        # attribute values of objects created during simulation
        self.rng = rng if rng is not None else random.Random(0)

    def __len__(self) -> int:
        return len(self.objects)

    def __contains__(self, oid: int) -> bool:
        return 0 <= oid < len(self.objects)

    def obj(self, oid: int) -> DbObject:
        if not 0 <= oid < len(self.objects):
            raise UnknownObjectError(f"unknown object {oid}")
        return self.objects[oid]

    def class_def(self, class_id: int) -> ClassDef:
        return self.classes[class_id]

    def add_object(self, class_id: int, size_bytes: int) -> int:
        if class_id not in self._instances:
            raise UnknownObjectError(f"unknown class {class_id}")
        oid = len(self.objects)
        attrs = [self.rng.random() for _ in range(self.classes[class_id].attr_count)]
        self.objects.append(DbObject(oid, class_id, attrs, size_bytes))
        self._instances[class_id].append(oid)
        return oid

    def link(self, anchor: int, new: int, kind: Rel) -> None:
        """Make ``new`` the ``kind`` of ``anchor`` (e.g. its version child)."""
        a, n = self.obj(anchor), self.obj(new)
        if kind is Rel.VERSION_CHILD:
            if n.version_parent is not None:
                raise StateError(f"object {new} already has a version parent")
            n.version_parent = anchor
            bisect.insort(a.version_children, new)
        elif kind is Rel.CONFIG_COMPONENT:
            if n.composite is not None:
                raise StateError(f"object {new} already has a composite")
            n.composite = anchor
            bisect.insort(a.components, new)
        elif kind is Rel.EQUIVALENCE:
            if anchor == new:
                raise StateError("an object cannot be equivalent to itself")
            if new not in a.equivalents:
                bisect.insort(a.equivalents, new)
                bisect.insort(n.equivalents, anchor)
        else:
            raise ConfigError(f"cannot link with kind {kind}")

    def related(self, oid: int, kind: Rel) -> list[int]:
        o = self.obj(oid)
        if kind is Rel.VERSION_CHILD:
            return list(o.version_children)
        if kind is Rel.VERSION_PARENT:
            return [] if o.version_parent is None else [o.version_parent]
        if kind is Rel.CONFIG_COMPONENT:
            return list(o.components)
        if kind is Rel.CONFIG_COMPOSITE:
            return [] if o.composite is None else [o.composite]
        if kind is Rel.EQUIVALENCE:
            return list(o.equivalents)
        raise ConfigError(f"unknown relationship kind {kind}")

    def direct_relatives(self, oid: int) -> list[tuple[int, Rel]]:
        """All (neighbor, kind) pairs of ``oid``, kind seen from ``oid``."""
        o = self.obj(oid)
        out = []
        if o.version_parent is not None:
            out.append((o.version_parent, Rel.VERSION_PARENT))
        out.extend((c, Rel.VERSION_CHILD) for c in o.version_children)
        if o.composite is not None:
            out.append((o.composite, Rel.CONFIG_COMPOSITE))
        out.extend((c, Rel.CONFIG_COMPONENT) for c in o.components)
        out.extend((e, Rel.EQUIVALENCE) for e in o.equivalents)
        return out

    def instances(self, class_id: int) -> list[int]:
        if class_id not in self._instances:
            raise UnknownObjectError(f"unknown class {class_id}")
        return self._instances[class_id]

    def edge_count(self, family: Family) -> int:
        if family is Family.VERSION:
            return sum(o.version_parent is not None for o in self.objects)
        if family is Family.CONFIGURATION:
            return sum(o.composite is not None for o in self.objects)
        return sum(len(o.equivalents) for o in self.objects) // 2

    def signature(self) -> tuple:
        """Hashable structural fingerprint, used for determinism checks."""
        return tuple(
            (o.id, o.class_id, tuple(o.attributes), o.size_bytes, o.version_parent,
             tuple(o.version_children), o.composite, tuple(o.components), tuple(o.equivalents))
            for o in self.objects
        )


def _root(parent: list[int | None], i: int) -> int:
    while parent[i] is not None:
        i = parent[i]
    return i


def generate_database(spec: DatabaseSpec) -> ObjectGraph:
    """Build the initial database described by ``spec``; a pure function of the seed."""
    spec.validate()
    fs = spec.freq_spec()
    classes = [
        ClassDef(c, f"Class{c}", spec.attr_count_per_class, fs) for c in range(spec.class_count)
    ]
    rng = random.Random(f"objectgraph:{spec.seed}")
    graph = ObjectGraph(classes, rng=random.Random(f"objectgraph-attrs:{spec.seed}"))

    b = spec.version_branching
    vparent: list[int | None] = []
    cparent: list[int | None] = []
    fanout_hi = max(1, round(2 * spec.config_fanout) - 1)
    branch_hi = max(1, round(2 * b) - 1)

    # depth-first stack of (relative, link kind, config depth); a composite and
    # the version histories of its parts end up in one contiguous id range
    stack: list[tuple[int | None, Rel | None, int]] = []
    for i in range(spec.initial_objects):
        if not stack:
            stack.append((None, None, 0))
        parent, kind, depth = stack.pop()
        graph.add_object(i % spec.class_count, spec.object_size_bytes)
        vparent.append(parent if kind is Rel.VERSION_CHILD else None)
        cparent.append(parent if kind is Rel.CONFIG_COMPONENT else None)
        if parent is not None:
            graph.link(parent, i, kind)
            if kind is Rel.VERSION_CHILD and cparent[parent] is not None:
                # an alternative version of a part belongs to the same composite
                cparent[i] = cparent[parent]
                graph.link(cparent[i], i, Rel.CONFIG_COMPONENT)
        if kind is not Rel.VERSION_CHILD and depth < spec.config_depth and spec.config_fanout > 0:
            stack.extend([(i, Rel.CONFIG_COMPONENT, depth + 1)] * rng.randint(1, fanout_hi))
        if b > 0 and rng.random() < spec.version_fraction:
            stack.extend([(i, Rel.VERSION_CHILD, depth)] * rng.randint(1, branch_hi))
        if i == 0:
            continue
        if spec.equivalence_prob > 0 and rng.random() < spec.equivalence_prob:
            vr, cr = _root(vparent, i), _root(cparent, i)
            for _ in range(8):
                j = rng.randrange(i)
                if _root(vparent, j) != vr and _root(cparent, j) != cr:
                    graph.link(j, i, Rel.EQUIVALENCE)
                    break
    return graph


def get_related(graph: ObjectGraph, oid: int, kind: Rel) -> list[int]:
    return graph.related(oid, Rel(kind))


def create_object(graph: ObjectGraph, class_id: int, anchor: int, kind: Rel) -> int:
    """Create a new object of ``class_id`` linked to ``anchor``; returns its id."""
    kind = Rel(kind)
    if kind not in CREATE_KINDS:
        raise ConfigError(f"cannot create an object as {kind.value}")
    a = graph.obj(anchor)
    oid = graph.add_object(class_id, a.size_bytes)
    graph.link(anchor, oid, kind)
    return oid


def select_random_object(graph: ObjectGraph, rng: random.Random) -> int:
    if not graph.objects:
        raise StateError("cannot select from an empty graph")
    return rng.randrange(len(graph.objects))


def class_instances(graph: ObjectGraph, class_id: int) -> list[int]:
    return list(graph.instances(class_id))
