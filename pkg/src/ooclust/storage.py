"""Secondary storage model: pages, segments, the object->page map and an LRU buffer pool.

Every disk transfer goes through :class:`IoAccount`, split by purpose so the
clustering overhead can be reported separately from transaction I/O.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum

from .errors import CapacityError, ConfigError, StateError

DEFAULT_PAGE_BYTES = 2048
DEFAULT_BUFFER_PAGES = 16


class Purpose(str, Enum):
    TRANSACTION = "transaction"
    CLUSTERING = "clustering"


class Mode(str, Enum):
    READ = "read"
    WRITE = "write"


@dataclass
class Page:
    id: int
    capacity_bytes: int
    used_bytes: int = 0
    residents: set[int] = field(default_factory=set)
    segment: int | None = None

    @property
    def free_bytes(self) -> int:
        return self.capacity_bytes - self.used_bytes


@dataclass
class Segment:
    id: int
    classes: set[int]
    pages: list[int] = field(default_factory=list)


@dataclass
class IoAccount:
    txn_reads: int = 0
    txn_writes: int = 0
    clust_reads: int = 0
    clust_writes: int = 0

    @property
    def txn_total(self) -> int:
        return self.txn_reads + self.txn_writes

    @property
    def clust_total(self) -> int:
        return self.clust_reads + self.clust_writes

    @property
    def total(self) -> int:
        return self.txn_total + self.clust_total

    def add(self, purpose: Purpose, reads: int = 0, writes: int = 0) -> None:
        if reads < 0 or writes < 0:
            raise ValueError("I/O counts cannot be negative")
        if purpose is Purpose.TRANSACTION:
            self.txn_reads += reads
            self.txn_writes += writes
        else:
            self.clust_reads += reads
            self.clust_writes += writes

    def snapshot(self) -> IoAccount:
        return IoAccount(self.txn_reads, self.txn_writes, self.clust_reads, self.clust_writes)


class BufferPool:
    """LRU page buffer with write-back dirty pages."""

    def __init__(self, capacity_pages: int):
        if capacity_pages < 1:
            raise ConfigError("buffer pool needs at least one page")
        self.capacity_pages = capacity_pages
        self._lru: OrderedDict[int, None] = OrderedDict()
        self.dirty: set[int] = set()

    def __contains__(self, pid: int) -> bool:
        return pid in self._lru

    def __len__(self) -> int:
        return len(self._lru)

    @property
    def resident(self) -> list[int]:
        """Least recently used first."""
        return list(self._lru)

    def touch(self, pid: int, write: bool = False) -> tuple[bool, int | None, bool]:
        """Reference ``pid``. Returns (hit, evicted page or None, evicted page was dirty)."""
        evicted, was_dirty = None, False
        if pid in self._lru:
            self._lru.move_to_end(pid)
            hit = True
        else:
            hit = False
            if len(self._lru) >= self.capacity_pages:
                evicted, _ = self._lru.popitem(last=False)
                if evicted in self.dirty:
                    self.dirty.discard(evicted)
                    was_dirty = True
            self._lru[pid] = None
        if write:
            self.dirty.add(pid)
        return hit, evicted, was_dirty

    def discard(self, pid: int) -> None:
        """Forget a page without writing it back."""
        self._lru.pop(pid, None)
        self.dirty.discard(pid)

    def clear(self) -> None:
        self._lru.clear()
        self.dirty.clear()


class PageStore:
    def __init__(self, page_bytes: int = DEFAULT_PAGE_BYTES, buffer_pages: int = DEFAULT_BUFFER_PAGES):
        if page_bytes < 1:
            raise ConfigError("page capacity must be positive")
        self.page_bytes = page_bytes
        self.pages: dict[int, Page] = {}
        self.segments: dict[int, Segment] = {}
        self.buffer = BufferPool(buffer_pages)
        self.io = IoAccount()
        self._loc: dict[int, int] = {}
        self._sizes: dict[int, int] = {}
        self._next_page = 0
        self._next_segment = 0
        self.last_page: int | None = None
        self.peak_pages = 0
        self._nonempty = 0

    # --- catalog -----------------------------------------------------------

    def lookup_page(self, oid: int) -> int:
        try:
            return self._loc[oid]
        except KeyError:
            raise StateError(f"object {oid} is not placed") from None

    def is_placed(self, oid: int) -> bool:
        return oid in self._loc

    @property
    def placed_count(self) -> int:
        return len(self._loc)

    def page_map(self) -> dict[int, int]:
        return dict(self._loc)

    # --- pages and segments ------------------------------------------------

    def create_segment(self, classes) -> int:
        sid = self._next_segment
        self._next_segment += 1
        self.segments[sid] = Segment(sid, set(classes))
        return sid

    def allocate_page(self, segment: int | None = None) -> int:
        if segment is not None and segment not in self.segments:
            raise StateError(f"unknown segment {segment}")
        pid = self._next_page
        self._next_page += 1
        self.pages[pid] = Page(pid, self.page_bytes, segment=segment)
        if segment is not None:
            self.segments[segment].pages.append(pid)
        self.last_page = pid
        self.peak_pages = max(self.peak_pages, len(self.pages))
        return pid

    def page(self, pid: int) -> Page:
        try:
            return self.pages[pid]
        except KeyError:
            raise StateError(f"unknown page {pid}") from None

    def free_bytes(self, pid: int) -> int:
        return self.page(pid).free_bytes

    def fits(self, pid: int, size: int) -> bool:
        return self.page(pid).free_bytes >= size

    def place_object(self, oid: int, pid: int, size: int) -> None:
        """Put ``oid`` on ``pid``, moving it off its previous page if any."""
        page = self.page(pid)
        if size > self.page_bytes:
            raise CapacityError(f"object {oid} ({size} B) exceeds page capacity {self.page_bytes} B")
        old = self._loc.get(oid)
        if old == pid:
            return
        if page.free_bytes < size:
            raise CapacityError(f"page {pid} has {page.free_bytes} B free, object {oid} needs {size}")
        if old is not None:
            prev = self.pages[old]
            prev.residents.discard(oid)
            prev.used_bytes -= self._sizes[oid]
            if not prev.residents:
                self._nonempty -= 1
        if not page.residents:
            self._nonempty += 1
        page.residents.add(oid)
        page.used_bytes += size
        self._loc[oid] = pid
        self._sizes[oid] = size

    def drop_page(self, pid: int) -> None:
        page = self.page(pid)
        if page.residents:
            raise StateError(f"page {pid} still holds {len(page.residents)} objects")
        if page.segment is not None:
            self.segments[page.segment].pages.remove(pid)
        del self.pages[pid]
        self.buffer.discard(pid)
        if self.last_page == pid:
            self.last_page = None

    def replace_pages(self, old_pids, groups, segment: int | None = None) -> list[int]:
        """Write ``groups`` (lists of object ids) onto fresh pages, then drop ``old_pids``.

        The new set coexists with the old one until the copy is complete, which
        is what ``peak_pages`` records.
        """
        old_pids = list(old_pids)
        dropping = set(old_pids)
        # buffered pages in recency order, most recent first
        cached = [pid for pid in reversed(self.buffer.resident) if pid in dropping]
        cached_objects = [list(self.pages[pid].residents) for pid in cached]
        new_pids = []
        for group in groups:
            pid = self.allocate_page(segment)
            for oid in group:
                self.place_object(oid, pid, self._sizes[oid])
            new_pids.append(pid)
        for pid in old_pids:
            self.drop_page(pid)
        self._rewarm(cached_objects, set(new_pids))
        return new_pids

    def _rewarm(self, cached_objects, new_pids) -> None:
        """Keep the new images of previously buffered objects resident.

        The rewrite streamed every page through memory, so the frames that held
        old pages now hold the new pages their objects moved to.
        """
        free = self.buffer.capacity_pages - len(self.buffer)
        warm = []
        seen = set()
        for objs in cached_objects:
            for oid in sorted(objs):
                pid = self._loc[oid]
                if pid in new_pids and pid not in seen and pid not in self.buffer:
                    seen.add(pid)
                    warm.append(pid)
        for pid in reversed(warm[:free]):
            self.buffer.touch(pid)

    def pages_used(self) -> int:
        """Allocated pages holding at least one object."""
        return self._nonempty

    def used_page_ids(self) -> list[int]:
        return [pid for pid, p in self.pages.items() if p.residents]

    # --- I/O ---------------------------------------------------------------

    def access_page(self, pid: int, purpose: Purpose = Purpose.TRANSACTION, mode: Mode = Mode.READ) -> bool:
        """Reference a page through the buffer. Returns True on a hit.

        A miss charges one read to ``purpose``; evicting a dirty page charges one
        write to the same purpose.
        """
        if pid not in self.pages:
            raise StateError(f"unknown page {pid}")
        hit, _, was_dirty = self.buffer.touch(pid, write=mode is Mode.WRITE)
        if not hit:
            self.io.add(purpose, reads=1, writes=1 if was_dirty else 0)
        return hit

    def charge(self, purpose: Purpose, reads: int = 0, writes: int = 0) -> None:
        """Direct transfers that bypass the buffer (placement writes, bulk rewrites)."""
        self.io.add(purpose, reads, writes)
