import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ooclust.errors import CapacityError, ConfigError
from ooclust.objectgraph import DatabaseSpec, Rel, create_object, generate_database
from ooclust.policies import (
    CactisPolicy,
    CkPolicy,
    NullPolicy,
    OrionPolicy,
    PolicyConfig,
    cactis_greedy_pack,
    ck_candidates,
    ck_choose_page,
    colocated_weight,
    groups_from_assignment,
    make_policy,
    random_packing,
)
from ooclust.storage import PageStore, Purpose

from oracles import brute_best_packing_weight


def pages_of(assignment):
    return sorted(sorted(g) for g in groups_from_assignment(assignment))


# --- Cactis greedy packing ----------------------------------------------------


def test_greedy_example():
    A, B, C = 0, 1, 2
    packing = cactis_greedy_pack(
        {A: 1, B: 1, C: 1}, {A: 10, B: 5, C: 1}, {(A, B): 4, (A, C): 1}, page_capacity=2
    )
    assert pages_of(packing) == [[A, B], [C]]


def test_greedy_zero_stats_is_sequential():
    sizes = {i: 1 for i in range(10)}
    packing = cactis_greedy_pack(sizes, {}, {}, page_capacity=3)
    assert [packing[i] for i in range(10)] == [0, 0, 0, 1, 1, 1, 2, 2, 2, 3]


def test_greedy_rejects_oversized():
    with pytest.raises(CapacityError):
        cactis_greedy_pack({0: 5}, {}, {}, page_capacity=4)


def test_greedy_fill_factor_limits_pages():
    sizes = {i: 1 for i in range(8)}
    assert len(set(cactis_greedy_pack(sizes, {}, {}, 4, fill_factor=0.5).values())) == 4


def test_greedy_tie_prefers_hotter_then_lower_id():
    # 0 is hottest; 1 and 2 have equal affinity to 0, 2 is hotter
    packing = cactis_greedy_pack({0: 1, 1: 1, 2: 1}, {0: 9, 1: 1, 2: 3}, {(0, 1): 2, (0, 2): 2}, 2)
    assert pages_of(packing) == [[0, 2], [1]]
    packing = cactis_greedy_pack({0: 1, 1: 1, 2: 1}, {0: 9}, {(0, 1): 2, (0, 2): 2}, 2)
    assert pages_of(packing) == [[0, 1], [2]]


instances = st.integers(2, 12).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.integers(2, 4),
        st.dictionaries(st.integers(0, n - 1), st.integers(0, 20)),
        st.dictionaries(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] < p[1]),
            st.integers(1, 10),
        ),
    )
)


@settings(max_examples=150, deadline=None)
@given(instances)
def test_greedy_is_total_capacity_respecting_and_deterministic(inst):
    n, cap, access, trav = inst
    sizes = {i: 1 for i in range(n)}
    p1 = cactis_greedy_pack(sizes, access, trav, cap)
    p2 = cactis_greedy_pack(dict(sizes), dict(access), dict(trav), cap)
    assert p1 == p2
    assert sorted(p1) == list(range(n))
    for g in groups_from_assignment(p1):
        assert 1 <= len(g) <= cap


@settings(max_examples=60, deadline=None)
@given(instances)
def test_greedy_never_beats_exhaustive_optimum(inst):
    n, cap, access, trav = inst
    if n > 8:
        n = 8
        trav = {k: v for k, v in trav.items() if k[1] < 8}
        access = {k: v for k, v in access.items() if k < 8}
    sizes = {i: 1 for i in range(n)}
    w = colocated_weight(cactis_greedy_pack(sizes, access, trav, cap), trav)
    assert w <= brute_best_packing_weight(n, cap, trav)


def test_random_packing_respects_capacity():
    rng = random.Random(1)
    sizes = {i: rng.choice([1, 2]) for i in range(30)}
    p = random_packing(sizes, 4, rng)
    for g in groups_from_assignment(p):
        assert sum(sizes[o] for o in g) <= 4


# --- policies on a generated database -------------------------------------------


def setup(name, n=300, page=1024, buffer=8, **cfg):
    g = generate_database(DatabaseSpec(initial_objects=n, seed=3))
    store = PageStore(page, buffer)
    pol = make_policy(g, store, PolicyConfig(name=name, **cfg))
    pol.load()
    store.io.__init__()
    return g, store, pol


@pytest.mark.parametrize("name", ["null", "cactis", "orion", "ck"])
def test_load_places_everything_without_io(name):
    g, store, pol = setup(name)
    pol.check_conservation()
    assert store.placed_count == len(g)
    assert store.io.total == 0


def test_null_is_sequential_and_never_reorganizes():
    g, store, pol = setup("null", page=1024)
    per_page = 1024 // 128
    assert all(store.lookup_page(i) == i // per_page for i in range(len(g)))
    for _ in range(100):
        assert pol.maybe_reorganize(0.0) is None
    assert store.io.clust_total == 0


def test_cactis_reorg_counters():
    g, store, pol = setup("cactis", reorg_interval=1)
    rng = random.Random(0)
    for _ in range(400):
        a = rng.randrange(len(g))
        pol.on_object_accessed(a)
        for b, _ in g.direct_relatives(a):
            pol.on_relationship_traversed(a, b, None)
    P = store.pages_used()
    report = pol.maybe_reorganize(5.0)
    Q = len(store.pages)
    assert (report.reads, report.writes) == (P, Q)
    assert (store.io.clust_reads, store.io.clust_writes) == (P, Q)
    assert report.io_count == P + Q
    pol.check_conservation()


def test_cactis_reorg_is_idempotent():
    g, store, pol = setup("cactis", reorg_interval=1)
    for a in range(0, 200, 3):
        pol.on_object_accessed(a)
        for b, _ in g.direct_relatives(a):
            pol.on_relationship_traversed(a, b, None)
    pol.reorganize(1.0)
    first = sorted(sorted(p.residents) for p in store.pages.values())
    pol.reorganize(2.0)
    second = sorted(sorted(p.residents) for p in store.pages.values())
    assert first == second


def test_cactis_reorg_interval_counts_transactions():
    g, store, pol = setup("cactis", reorg_interval=5)
    results = [pol.maybe_reorganize(float(t)) for t in range(10)]
    assert [r is not None for r in results] == [False] * 4 + [True] + [False] * 4 + [True]


def test_cactis_puts_new_objects_near_relatives():
    g, store, pol = setup("cactis")
    new = create_object(g, 0, 10, Rel.VERSION_CHILD)
    pid = pol.on_object_created(new)
    assert pid == store.lookup_page(10)
    assert (store.io.clust_reads, store.io.clust_writes) == (0, 1)


def test_orion_segment_purity():
    g, store, pol = setup("orion", reorg_interval=3)
    rng = random.Random(2)
    for t in range(40):
        new = create_object(g, rng.randrange(len(g.classes)), rng.randrange(len(g)), Rel.CONFIG_COMPONENT)
        pol.on_object_created(new)
        pol.maybe_reorganize(float(t))
    for p in store.pages.values():
        assert len({g.objects[o].class_id for o in p.residents}) <= 1
    pol.check_conservation()


def test_orion_places_on_last_page_of_class_segment():
    g, store, pol = setup("orion")
    cls = 4
    sid = pol.segment_of(cls)
    last = store.segments[sid].pages[-1]
    had_room = store.fits(last, 128)
    new = create_object(g, cls, 0, Rel.CONFIG_COMPONENT)
    pid = pol.on_object_created(new)
    assert pid == store.segments[sid].pages[-1]
    assert (pid == last) == had_room
    # fill the segment's last page and check the overflow appends a page
    while store.fits(pid, 128):
        pid = pol.on_object_created(create_object(g, cls, 0, Rel.CONFIG_COMPONENT))
    full = pid
    pid = pol.on_object_created(create_object(g, cls, 0, Rel.CONFIG_COMPONENT))
    assert pid != full and store.segments[sid].pages[-1] == pid


def test_orion_reorg_charges_read_passes():
    g, store, pol = setup("orion", orion_read_passes=3)
    P = store.pages_used()
    report = pol.reorganize(0.0)
    assert report.reads == 3 * P
    assert report.writes == len(store.pages)
    assert store.io.clust_total == report.io_count


def test_orion_cluster_message_merges_segments():
    g = generate_database(DatabaseSpec(initial_objects=200, class_count=5, seed=1))
    store = PageStore(1024, 8)
    pol = OrionPolicy(g, store, PolicyConfig(name="orion", cluster_directives=[["Class0", 1]]))
    pol.load()
    assert pol.segment_of(0) == pol.segment_of(1)
    assert pol.segment_of(2) != pol.segment_of(0)
    mixed = [p for p in store.pages.values() if len({g.objects[o].class_id for o in p.residents}) > 1]
    assert mixed
    report = pol.cluster_message([2, "Class0"], now=1.0)
    assert pol.segment_of(2) == pol.segment_of(1) == pol.segment_of(0)
    assert report.writes > 0
    pol.check_conservation()


def test_orion_cluster_message_errors():
    g, store, pol = setup("orion")
    with pytest.raises(ConfigError):
        pol.cluster_message([])
    with pytest.raises(ConfigError):
        pol.cluster_message(["NoSuchClass"])
    with pytest.raises(ConfigError):
        PolicyConfig(name="orion", cluster_directives=[[]]).validate()


def test_orion_without_periodic_never_reorganizes():
    g, store, pol = setup("orion", reorg_interval=1, orion_periodic=False)
    assert all(pol.maybe_reorganize(float(t)) is None for t in range(20))


def test_ck_prefers_version_parent():
    g, store, pol = setup("ck", n=100)
    # anchor is a version parent; its page ranks first
    new = create_object(g, 0, 5, Rel.VERSION_CHILD)
    cands = ck_candidates(g, store, new, 0.1)
    assert cands[0][1] == 5
    assert cands[0][0] == pytest.approx(0.6 + 0.1 * 2)


def test_ck_falls_back_to_fresh_page():
    g = generate_database(DatabaseSpec(initial_objects=16, seed=0))
    store = PageStore(page_bytes=128, buffer_pages=4)  # one object per page
    pol = CkPolicy(g, store, PolicyConfig(name="ck"))
    pol.load()
    n_pages = len(store.pages)
    new = create_object(g, 0, 3, Rel.CONFIG_COMPONENT)
    pid = pol.on_object_created(new)
    assert pid not in range(n_pages)
    assert store.io.clust_reads <= 1


@pytest.mark.parametrize("n", [200, 800, 3200])
def test_ck_clustering_reads_bounded_by_relative_pages(n):
    g, store, pol = setup("ck", n=n)
    rng = random.Random(n)
    for _ in range(100):
        kind = rng.choice([Rel.VERSION_CHILD, Rel.CONFIG_COMPONENT])
        new = create_object(g, rng.randrange(len(g.classes)), rng.randrange(len(g)), kind)
        reads = store.io.clust_reads
        pol.on_object_created(new)
        rel_pages = {store.lookup_page(r) for r, _ in g.direct_relatives(new)}
        assert store.io.clust_reads - reads <= 1 + len(rel_pages)


def test_ck_uncharged_placement():
    g, store, pol = setup("ck", n=50)
    new = create_object(g, 0, 1, Rel.CONFIG_COMPONENT)
    ck_choose_page(g, store, new, charge=False)
    assert store.io.total == 0


@pytest.mark.parametrize("name", ["null", "cactis", "orion", "ck"])
def test_policies_are_deterministic(name):
    maps = []
    for _ in range(2):
        g, store, pol = setup(name, reorg_interval=7)
        rng = random.Random(9)
        for t in range(60):
            a = rng.randrange(len(g))
            pol.on_object_accessed(a)
            if t % 4 == 0:
                new = create_object(g, a % len(g.classes), a, Rel.VERSION_CHILD)
                pol.on_object_created(new)
            pol.maybe_reorganize(float(t))
        maps.append(store.page_map())
    assert maps[0] == maps[1]


def test_policy_config_validation():
    for bad in [dict(name="bogus"), dict(reorg_interval=0), dict(cactis_fill_factor=0.0),
                dict(orion_read_passes=-1), dict(ck_lambda=-0.5)]:
        with pytest.raises(ConfigError):
            PolicyConfig(**bad).validate()


def test_make_policy_classes():
    g = generate_database(DatabaseSpec(initial_objects=10))
    s = PageStore()
    kinds = {n: type(make_policy(g, s, PolicyConfig(name=n))) for n in ["null", "cactis", "orion", "ck"]}
    assert kinds == {"null": NullPolicy, "cactis": CactisPolicy, "orion": OrionPolicy, "ck": CkPolicy}


def test_placement_write_is_clustering_io():
    g, store, pol = setup("null")
    new = create_object(g, 0, 0, Rel.VERSION_CHILD)
    pol.on_object_created(new)
    assert store.io.clust_writes == 1 and store.io.txn_total == 0
    store.charge(Purpose.TRANSACTION, reads=2)
    assert store.io.txn_reads == 2
