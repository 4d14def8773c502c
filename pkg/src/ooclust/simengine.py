"""Discrete-event engine for a closed population of users running transactions.

Resources: users think and submit transactions; the transaction and object
managers walk each transaction's step list (CPU and memory are pure delays);
page misses and clustering transfers queue FIFO at a single disk; the active
clustering policy is consulted at object creation and after every completed
transaction. A reorganization closes a gate: no transaction makes progress
until the reorganization's I/O has been performed.
"""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, field, replace

from .errors import ConfigError, StateError
from .objectgraph import DatabaseSpec, ObjectGraph, create_object, generate_database
from .policies import ClusteringPolicy, PolicyConfig, ReorgReport, make_policy
from .storage import DEFAULT_BUFFER_PAGES, DEFAULT_PAGE_BYTES, IoAccount, PageStore, Purpose
from .workload import NEW, Op, Transaction, TransactionGenerator, WorkloadConfig, expand


@dataclass(frozen=True)
class CostModel:
    t_disk_io: float = 10e-3
    t_mem: float = 100e-9
    t_cpu: float = 5e-6

    def validate(self) -> None:
        if min(self.t_disk_io, self.t_mem, self.t_cpu) <= 0:
            raise ConfigError("cost model times must be strictly positive")
        if self.t_disk_io <= self.t_mem:
            raise ConfigError("a disk access must cost more than a memory access")


@dataclass
class StorageConfig:
    page_bytes: int = DEFAULT_PAGE_BYTES
    buffer_pages: int = DEFAULT_BUFFER_PAGES

    def validate(self) -> None:
        if self.page_bytes < 1:
            raise ConfigError("page_bytes must be >= 1")
        if self.buffer_pages < 1:
            raise ConfigError("buffer_pages must be >= 1")


@dataclass
class EngineConfig:
    users: int = 8
    think_time_mean: float = 1.0
    transactions_to_run: int = 10_000
    warmup_fraction: float = 0.1
    cost: CostModel = field(default_factory=CostModel)
    database: DatabaseSpec = field(default_factory=DatabaseSpec)
    storage: StorageConfig = field(default_factory=StorageConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    seed: int = 0
    check_invariants: bool = False

    def validate(self) -> None:
        if self.users < 1:
            raise ConfigError("users must be >= 1")
        if self.transactions_to_run < 1:
            raise ConfigError("transactions_to_run must be >= 1")
        if self.think_time_mean < 0:
            raise ConfigError("think_time_mean must be >= 0")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError("warmup_fraction must lie in [0, 1)")
        self.cost.validate()
        self.storage.validate()
        replace(self.database, seed=self.seed).validate()
        self.policy.validate()
        self.workload.validate()
        if self.database.object_size_bytes > self.storage.page_bytes:
            raise ConfigError("objects are larger than a page")


@dataclass(frozen=True)
class CreationRecord:
    oid: int
    clust_reads: int
    clust_writes: int
    relative_pages: int


@dataclass(frozen=True)
class TxnRecord:
    kind: str
    arrival: float
    completion: float
    service: float
    waiting: float
    blocked: float
    ios: int

    @property
    def response(self) -> float:
        return self.completion - self.arrival


@dataclass
class Metrics:
    policy: str
    db_initial_size: int
    seed: int
    completed: int = 0
    measured: int = 0
    response_times: list[float] = field(default_factory=list)
    txn_records: list[TxnRecord] = field(default_factory=list)
    io_at_warmup: IoAccount = field(default_factory=IoAccount)
    io_final: IoAccount = field(default_factory=IoAccount)
    pages_samples: list[int] = field(default_factory=list)
    peak_pages: int = 0
    reorgs: list[ReorgReport] = field(default_factory=list)
    blocked_time: float = 0.0
    disk_busy: float = 0.0
    creations: list[CreationRecord] = field(default_factory=list)
    end_time: float = 0.0

    @property
    def reorg_count(self) -> int:
        return len(self.reorgs)

    @property
    def mean_response_time(self) -> float:
        return sum(self.response_times) / len(self.response_times) if self.response_times else 0.0

    @property
    def mean_txn_ios(self) -> float:
        d = self.io_final.txn_total - self.io_at_warmup.txn_total
        return d / self.measured if self.measured else 0.0

    @property
    def mean_clust_ios(self) -> float:
        d = self.io_final.clust_total - self.io_at_warmup.clust_total
        return d / self.measured if self.measured else 0.0

    @property
    def mean_pages_used(self) -> float:
        return sum(self.pages_samples) / len(self.pages_samples) if self.pages_samples else 0.0


class EventQueue:
    """Time-ordered queue; equal-time events fire in insertion order."""

    def __init__(self):
        self._heap: list = []
        self._seq = itertools.count()
        self.now = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, time: float, action, *args) -> None:
        if time < self.now:
            raise StateError(f"cannot schedule at {time} before the clock ({self.now})")
        heapq.heappush(self._heap, (time, next(self._seq), action, args))

    def pop(self):
        time, _, action, args = heapq.heappop(self._heap)
        self.now = time
        return action, args


def reorg_blocking(now: float, io_count: int, t_disk_io: float) -> float:
    """Time at which transaction service resumes after a reorganization."""
    return now + io_count * t_disk_io


@dataclass
class _Active:
    user: int
    txn: Transaction
    steps: list
    pos: int = 0
    new_oid: int | None = None
    service: float = 0.0
    waiting: float = 0.0
    blocked: float = 0.0
    ios: int = 0


class Engine:
    def __init__(self, config: EngineConfig):
        config.validate()
        self.config = config
        self.cost = config.cost
        spec = replace(config.database, seed=config.seed)
        self.graph: ObjectGraph = generate_database(spec)
        self.store = PageStore(config.storage.page_bytes, config.storage.buffer_pages)
        self.policy: ClusteringPolicy = make_policy(self.graph, self.store, replace(config.policy))
        self.policy.load()
        self.store.io = IoAccount()
        self.generator = TransactionGenerator(config.workload, random.Random(f"workload:{config.seed}"))
        self._think_rng = random.Random(f"think:{config.seed}")
        self.events = EventQueue()
        self.metrics = Metrics(config.policy.name, spec.initial_objects, config.seed)
        self.gate_end = 0.0
        self.disk_free = 0.0
        self.warmup = int(config.transactions_to_run * config.warmup_fraction)
        self.user_state = ["thinking"] * config.users
        self._stop = False

    # -- helpers --------------------------------------------------------------

    def _think(self) -> float:
        m = self.config.think_time_mean
        return self._think_rng.expovariate(1.0 / m) if m > 0 else 0.0

    def _gated(self, act: _Active, action) -> bool:
        now = self.events.now
        if now < self.gate_end:
            act.blocked += self.gate_end - now
            self.user_state[act.user] = "blocked"
            self.events.schedule(self.gate_end, action, act)
            return True
        return False

    def _check_population(self) -> None:
        if len(self.user_state) != self.config.users:
            raise StateError("user population changed")
        if len(self.events) != self.config.users:
            raise StateError(f"{len(self.events)} pending events for {self.config.users} users")

    # -- decision rules -------------------------------------------------------

    def rule_r1_generate(self, user: int) -> _Active:
        txn = self.generator.next(self.graph, self.events.now)
        return _Active(user, txn, expand(txn, self.graph))

    def rule_r2_1_extract_object(self, act: _Active, oid: int) -> int:
        return act.new_oid if oid == NEW else oid

    def rule_r2_2_1_access_page_number(self, oid: int) -> int:
        return self.store.lookup_page(oid)

    def rule_r2_2_2_access_page(self, pid: int, mode) -> int:
        """Buffer access on behalf of a transaction; returns disk transfers needed."""
        before = self.store.io.total
        self.store.access_page(pid, Purpose.TRANSACTION, mode)
        return self.store.io.total - before

    def rule_r2_3_perform_operation(self, act: _Active, step) -> float:
        if step.op is Op.UPDATE_ATTR:
            oid = self.rule_r2_1_extract_object(act, step.oid)
            self.graph.objects[oid].attributes[step.arg] = act.txn.new_value
        return self.cost.t_mem

    def rule_r3_perform_clustering(self, act: _Active) -> int:
        """Creation-time placement by the active policy; returns disk transfers charged."""
        io = self.store.io
        reads, writes = io.clust_reads, io.clust_writes
        oid = act.new_oid
        self.policy.on_object_created(oid)
        rel_pages = {
            self.store.lookup_page(r) for r, _ in self.graph.direct_relatives(oid) if self.store.is_placed(r)
        }
        rec = CreationRecord(oid, io.clust_reads - reads, io.clust_writes - writes, len(rel_pages))
        self.metrics.creations.append(rec)
        return rec.clust_reads + rec.clust_writes

    def rule_r3_after_transaction(self) -> None:
        report = self.policy.maybe_reorganize(self.events.now)
        if report is None:
            return
        now = self.events.now
        busy = report.io_count * self.cost.t_disk_io
        self.gate_end = reorg_blocking(now, report.io_count, self.cost.t_disk_io)
        self.disk_free = max(self.disk_free, now) + busy
        self.metrics.disk_busy += busy
        self.metrics.blocked_time += busy
        self.metrics.reorgs.append(report)

    # -- event handlers -------------------------------------------------------

    def _arrive(self, user: int) -> None:
        act = self.rule_r1_generate(user)
        self.user_state[user] = "in-service"
        self._advance(act)

    def _advance(self, act: _Active) -> None:
        if self._gated(act, self._advance):
            return
        self.user_state[act.user] = "in-service"
        t_cpu = self.cost.t_cpu
        policy = self.policy
        steps = act.steps
        elapsed = 0.0
        while act.pos < len(steps):
            step = steps[act.pos]
            act.pos += 1
            elapsed += t_cpu
            op = step.op
            if op is Op.SELECT:
                oid = self.rule_r2_1_extract_object(act, step.oid)
                policy.on_object_accessed(oid)
                if step.via is not None:
                    policy.on_relationship_traversed(step.via, oid, step.family)
            elif op is Op.PAGE_NUMBER:
                self.rule_r2_2_1_access_page_number(self.rule_r2_1_extract_object(act, step.oid))
            elif op is Op.ACCESS_PAGE:
                pid = self.rule_r2_2_1_access_page_number(self.rule_r2_1_extract_object(act, step.oid))
                n = self.rule_r2_2_2_access_page(pid, step.mode)
                if n:
                    act.service += elapsed
                    self.events.schedule(self.events.now + elapsed, self._request_io, act, n)
                    return
            elif op is Op.READ_ATTRS or op is Op.UPDATE_ATTR:
                elapsed += self.rule_r2_3_perform_operation(act, step)
            elif op is Op.CREATE:
                class_id, kind = step.arg
                act.new_oid = create_object(self.graph, class_id, step.oid, kind)
            elif op is Op.PLACE:
                n = self.rule_r3_perform_clustering(act)
                if n:
                    act.service += elapsed
                    self.events.schedule(self.events.now + elapsed, self._request_io, act, n)
                    return
        act.service += elapsed
        self.events.schedule(self.events.now + elapsed, self._finish, act)

    def _request_io(self, act: _Active, n: int) -> None:
        if self._gated(act, lambda a: self._request_io(a, n)):
            return
        now = self.events.now
        start = max(now, self.disk_free)
        dur = n * self.cost.t_disk_io
        self.disk_free = start + dur
        self.metrics.disk_busy += dur
        act.waiting += start - now
        act.service += dur
        act.ios += n
        self.user_state[act.user] = "queued" if start > now else "in-service"
        self.events.schedule(self.disk_free, self._advance, act)

    def _finish(self, act: _Active) -> None:
        if self._gated(act, self._finish):
            return
        now = self.events.now
        txn = act.txn
        txn.completion_time = now
        m = self.metrics
        m.completed += 1
        if m.completed > self.warmup:
            m.measured += 1
            m.response_times.append(now - txn.arrival_time)
            m.txn_records.append(
                TxnRecord(txn.kind.value, txn.arrival_time, now, act.service, act.waiting, act.blocked, act.ios)
            )
        if m.completed == self.warmup:
            m.io_at_warmup = self.store.io.snapshot()
        self.rule_r3_after_transaction()
        if m.completed > self.warmup:
            m.pages_samples.append(self.store.pages_used())
        if m.completed >= self.config.transactions_to_run:
            self._stop = True
            return
        self.user_state[act.user] = "thinking"
        self.events.schedule(now + self._think(), self._arrive, act.user)

    # -- driver ---------------------------------------------------------------

    def run(self) -> Metrics:
        for u in range(self.config.users):
            self.events.schedule(self._think(), self._arrive, u)
        last = 0.0
        while not self._stop:
            if not len(self.events):
                raise StateError("event queue drained before the run completed")
            action, args = self.events.pop()
            if self.events.now < last:
                raise StateError("clock moved backwards")
            last = self.events.now
            action(*args)
            if self.config.check_invariants and not self._stop:
                self._check_population()
        m = self.metrics
        m.io_final = self.store.io.snapshot()
        m.peak_pages = self.store.peak_pages
        m.end_time = self.events.now
        return m


def run(config: EngineConfig) -> Metrics:
    return Engine(config).run()
