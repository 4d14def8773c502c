import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ooclust.errors import ConfigError, StateError
from ooclust.objectgraph import CkFrequencySpec, ClassDef, DatabaseSpec, Family, ObjectGraph, Rel, generate_database
from ooclust.workload import (
    CREATE_KINDS,
    NEW,
    Op,
    Transaction,
    TransactionGenerator,
    TransactionKind as K,
    WorkloadConfig,
    default_mix,
    expand,
    fetched_objects,
    next_transaction,
    uniform_read_mix,
    validate_mix,
)


def empty_graph(classes=1):
    return ObjectGraph([ClassDef(c, f"C{c}", 3, CkFrequencySpec()) for c in range(classes)])


def binary_version_tree():
    # 0 -> 1,2 ; 1 -> 3,4 ; 2 -> 5,6
    g = empty_graph()
    for _ in range(7):
        g.add_object(0, 100)
    for parent, child in [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]:
        g.link(parent, child, Rel.VERSION_CHILD)
    return g


def config_chain(depth):
    g = empty_graph()
    for _ in range(depth + 1):
        g.add_object(0, 100)
    for i in range(depth):
        g.link(i, i + 1, Rel.CONFIG_COMPONENT)
    return g


def test_group_lookup_versions_on_binary_tree():
    g = binary_version_tree()
    txn = Transaction(K.GROUP_LOOKUP_VERSIONS, start=0)
    assert sorted(fetched_objects(txn, g)) == list(range(7))


def test_reference_lookup_configuration_from_depth_three_leaf():
    g = config_chain(3)
    txn = Transaction(K.REFERENCE_LOOKUP_CONFIGURATION, start=3)
    fetched = fetched_objects(txn, g)
    assert fetched[0] == 3
    assert fetched[1:] == [2, 1, 0]


def test_closure_depth_zero_fetches_start_only():
    g = binary_version_tree()
    for kind in [K.CLOSURE_VERSIONS, K.CLOSURE_CONFIGURATION, K.CLOSURE_EQUIVALENCE, K.CLOSURE_RANDOM]:
        assert fetched_objects(Transaction(kind, start=1, depth=0), g) == [1]


def test_closure_negative_depth_rejected():
    g = binary_version_tree()
    with pytest.raises(ConfigError):
        expand(Transaction(K.CLOSURE_VERSIONS, start=0, depth=-1), g)


def test_closure_respects_depth():
    g = binary_version_tree()
    assert sorted(fetched_objects(Transaction(K.CLOSURE_VERSIONS, start=0, depth=1), g)) == [0, 1, 2]


def test_group_lookup_equivalence_is_one_hop():
    g = empty_graph()
    for _ in range(4):
        g.add_object(0, 100)
    g.link(0, 1, Rel.EQUIVALENCE)
    g.link(1, 2, Rel.EQUIVALENCE)
    assert fetched_objects(Transaction(K.GROUP_LOOKUP_EQUIVALENCE, start=0), g) == [0, 1]


def test_extent_kinds():
    g = generate_database(DatabaseSpec(initial_objects=60, class_count=3, seed=2))
    scan = fetched_objects(Transaction(K.SEQUENTIAL_SCAN, class_id=1), g)
    assert scan == [i for i in range(60) if i % 3 == 1]
    rng_txn = Transaction(K.RANGE_LOOKUP, class_id=2, lo=0.25, hi=0.75)
    expect = [i for i in range(60) if i % 3 == 2 and 0.25 <= g.objects[i].attributes[0] < 0.75]
    assert fetched_objects(rng_txn, g) == expect


def test_name_lookup_steps():
    g = binary_version_tree()
    steps = expand(Transaction(K.NAME_LOOKUP, start=4), g)
    assert [s.op for s in steps] == [Op.SELECT, Op.PAGE_NUMBER, Op.ACCESS_PAGE, Op.READ_ATTRS]
    assert all(s.oid == 4 for s in steps)


def test_create_steps_place_new_object():
    g = binary_version_tree()
    steps = expand(Transaction(K.CREATE_COMPONENT, start=2, class_id=0), g)
    ops = [s.op for s in steps]
    assert ops[-3:] == [Op.CREATE, Op.PLACE, Op.ACCESS_PAGE]
    assert steps[-2].oid == NEW and steps[-1].oid == NEW


def test_update_steps():
    g = binary_version_tree()
    steps = expand(Transaction(K.UPDATE_ATTRIBUTE, start=1, attr_index=2, new_value=0.5), g)
    assert [s.op for s in steps] == [Op.SELECT, Op.PAGE_NUMBER, Op.ACCESS_PAGE, Op.UPDATE_ATTR]
    assert steps[2].mode.value == "write"


def test_degenerate_mix():
    g = generate_database(DatabaseSpec(initial_objects=30))
    gen = TransactionGenerator(WorkloadConfig(mix={K.NAME_LOOKUP: 1.0}), random.Random(1))
    assert {gen.next(g).kind for _ in range(500)} == {K.NAME_LOOKUP}


@pytest.mark.parametrize("mix", [default_mix(), uniform_read_mix()])
def test_mix_frequencies_within_three_sigma(mix):
    g = generate_database(DatabaseSpec(initial_objects=50))
    gen = TransactionGenerator(WorkloadConfig(mix=mix), random.Random(2024))
    n = 100_000
    counts = Counter(gen.next(g).kind for _ in range(n))
    for kind, p in mix.items():
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(counts[kind] - n * p) <= 3 * sigma + 1e-9, kind


def test_generator_replays_with_same_seed():
    g = generate_database(DatabaseSpec(initial_objects=200))

    def stream(seed):
        gen = TransactionGenerator(WorkloadConfig(mix=uniform_read_mix()), random.Random(seed))
        out = []
        for _ in range(300):
            t = gen.next(g)
            out.append((t.kind, t.start, t.class_id, t.lo, t.hi, t.hop_families, t.attr_index, t.new_value))
        return out

    assert stream(5) == stream(5)
    assert stream(5) != stream(6)


def test_next_transaction_on_empty_graph():
    with pytest.raises(StateError):
        next_transaction(default_mix(), empty_graph(), random.Random(0))


def test_mix_validation():
    with pytest.raises(ConfigError):
        validate_mix({K.NAME_LOOKUP: 0.5})
    with pytest.raises(ConfigError):
        validate_mix({"NoSuchKind": 1.0})
    with pytest.raises(ConfigError):
        validate_mix({K.NAME_LOOKUP: 1.5, K.SEQUENTIAL_SCAN: -0.5})
    assert validate_mix({"NameLookup": 1.0}) == {K.NAME_LOOKUP: 1.0}


def test_default_mix_shares():
    mix = default_mix()
    assert len(mix) == 15
    assert sum(mix.values()) == pytest.approx(1.0, abs=1e-12)
    assert sum(mix[k] for k in CREATE_KINDS) == pytest.approx(0.15)
    assert mix[K.UPDATE_ATTRIBUTE] == pytest.approx(0.05)
    um = uniform_read_mix()
    assert um[K.SEQUENTIAL_SCAN] == pytest.approx(0.8 / 12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 4), st.integers(5, 120))
def test_step_list_invariants(seed, depth, n):
    g = generate_database(DatabaseSpec(initial_objects=n, seed=seed, equivalence_prob=0.2))
    gen = TransactionGenerator(WorkloadConfig(mix=uniform_read_mix(), closure_depth=depth), random.Random(seed))
    max_fanout = max(
        max(len(o.version_children), len(o.components), len(o.equivalents)) for o in g.objects
    )
    for _ in range(30):
        txn = gen.next(g)
        steps = expand(txn, g)
        accessed = set()
        for s in steps:
            if s.op is Op.ACCESS_PAGE:
                accessed.add(s.oid)
            elif s.op in (Op.READ_ATTRS, Op.UPDATE_ATTR):
                assert s.oid in accessed
            elif s.op in (Op.CREATE, Op.PLACE):
                assert txn.kind in CREATE_KINDS
        if txn.kind.value.startswith("Closure"):
            bound = sum(max_fanout ** i for i in range(depth + 1))
            assert len(fetched_objects(txn, g)) <= bound


def test_hop_families_resampled_per_hop():
    g = generate_database(DatabaseSpec(initial_objects=50))
    gen = TransactionGenerator(WorkloadConfig(mix={K.CLOSURE_RANDOM: 1.0}, closure_depth=4), random.Random(3))
    seen = {gen.next(g).hop_families for _ in range(200)}
    assert all(len(h) == 4 for h in seen)
    assert len(seen) > 10
    assert {f for h in seen for f in h} == set(Family)
