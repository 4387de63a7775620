"""Memento TimeMap client and multi-archive aggregator.

TimeMaps are fetched per archive, parsed from ``application/link-format``,
merged, deduplicated on URI-M and filtered by a lower date bound.
"""

from __future__ import annotations

import datetime as dt
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

from .errors import (
    AllArchivesFailed,
    ArchiveError,
    ArchiveUnreachable,
    FetchError,
    TimeMapSyntaxError,
)
from .fetch import Fetcher, FetchPolicy
from .model import Archive
from .urls import CanonicalUrl, canonicalize_url

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0
DEFAULT_PARALLELISM = 4

_MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
_DAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
_RFC1123 = re.compile(
    r"^(?:(Mon|Tue|Wed|Thu|Fri|Sat|Sun), )?(\d{1,2}) (%s) (\d{4}) (\d{2}):(\d{2}):(\d{2}) GMT$"
    % "|".join(_MONTHS)
)

_TOKEN = re.compile(r"[A-Za-z0-9!#$&+\-.^_`|~*]+")
_BARE_VALUE = re.compile(r"[^;,\s]*")


def parse_http_date(text: str) -> dt.datetime:
    """RFC 1123 date, e.g. ``Sun, 15 Mar 2020 00:00:00 GMT``; raises ValueError."""
    m = _RFC1123.match(text.strip())
    if not m:
        raise ValueError(f"not an RFC 1123 date: {text!r}")
    _, day, mon, year, hh, mm, ss = m.groups()
    return dt.datetime(
        int(year), _MONTHS.index(mon) + 1, int(day), int(hh), int(mm), int(ss), tzinfo=dt.timezone.utc
    )


def format_http_date(t: dt.datetime) -> str:
    t = t.astimezone(dt.timezone.utc)
    return (
        f"{_DAYS[t.weekday()]}, {t.day:02d} {_MONTHS[t.month - 1]} {t.year:04d} "
        f"{t.hour:02d}:{t.minute:02d}:{t.second:02d} GMT"
    )


@dataclass(frozen=True)
class Link:
    target: str
    params: tuple[tuple[str, str], ...]

    def get(self, name: str) -> str | None:
        for k, v in self.params:
            if k == name:
                return v
        return None

    @property
    def rels(self) -> tuple[str, ...]:
        return tuple((self.get("rel") or "").lower().split())


def parse_link_format(body: str) -> tuple[list[Link], int]:
    """Split a link-format document into links.

    Returns the parsed links and the number of malformed link-values that
    were skipped. Commas and semicolons inside ``<...>`` or quoted strings do
    not split.
    """
    links: list[Link] = []
    malformed = 0
    i, n = 0, len(body)

    def skip_to_next_link(j: int) -> int:
        quoted = angled = False
        while j < n:
            c = body[j]
            if quoted:
                if c == "\\":
                    j += 1
                elif c == '"':
                    quoted = False
            elif angled:
                angled = c != ">"
            elif c == '"':
                quoted = True
            elif c == "<":
                angled = True
            elif c == ",":
                return j + 1
            j += 1
        return j

    while i < n:
        while i < n and (body[i].isspace() or body[i] == ","):
            i += 1
        if i >= n:
            break
        start = i
        if body[i] != "<":
            malformed += 1
            i = skip_to_next_link(i)
            continue
        end = body.find(">", i + 1)
        if end < 0:
            malformed += 1
            break
        target = body[i + 1 : end].strip()
        i = end + 1
        params: list[tuple[str, str]] = []
        ok = True
        while True:
            while i < n and body[i].isspace():
                i += 1
            if i >= n or body[i] == ",":
                i += 1
                break
            if body[i] != ";":
                ok = False
                break
            i += 1
            while i < n and body[i].isspace():
                i += 1
            m = _TOKEN.match(body, i)
            if not m:
                ok = False
                break
            name = m.group(0).lower()
            i = m.end()
            while i < n and body[i].isspace():
                i += 1
            value = ""
            if i < n and body[i] == "=":
                i += 1
                while i < n and body[i].isspace():
                    i += 1
                if i < n and body[i] == '"':
                    i += 1
                    chars = []
                    while i < n and body[i] != '"':
                        if body[i] == "\\" and i + 1 < n:
                            i += 1
                        chars.append(body[i])
                        i += 1
                    if i >= n:
                        ok = False
                        break
                    i += 1
                    value = "".join(chars)
                else:
                    vm = _BARE_VALUE.match(body, i)
                    value = vm.group(0)
                    i = vm.end()
            params.append((name, value))
        if not ok or not target:
            malformed += 1
            log.debug("malformed link-value near offset %d", start)
            if not ok:  # a complete link-value has already consumed its comma
                i = skip_to_next_link(i)
            continue
        links.append(Link(target, tuple(params)))
    return links, malformed


@dataclass(frozen=True)
class MementoRecord:
    uri_r: CanonicalUrl
    uri_m: str
    archive_id: str
    memento_datetime: dt.datetime

    @property
    def sort_key(self) -> tuple:
        return (self.memento_datetime, self.uri_m)


@dataclass(frozen=True)
class TimeMap:
    uri_r: CanonicalUrl
    archive_id: str
    mementos: tuple[MementoRecord, ...] = ()
    skipped: int = 0  # memento links with a missing or unparsable datetime
    malformed: int = 0  # link-values that did not parse at all

    def __len__(self) -> int:
        return len(self.mementos)


def parse_timemap(body: str, uri_r: CanonicalUrl | str, archive_id: str) -> TimeMap:
    uri_r = canonicalize_url(uri_r)
    links, malformed = parse_link_format(body or "")
    if not links and body and body.strip():
        raise TimeMapSyntaxError(f"{archive_id}: no link parsed from TimeMap for {uri_r}")
    records = []
    skipped = 0
    for link in links:
        if "memento" not in link.rels:
            continue
        raw_dt = link.get("datetime")
        try:
            when = parse_http_date(raw_dt or "")
        except ValueError:
            skipped += 1
            continue
        records.append(MementoRecord(uri_r, link.target, archive_id, when))
    records.sort(key=lambda r: r.sort_key)
    return TimeMap(uri_r, archive_id, tuple(records), skipped, malformed)


def serialize_timemap(tm: TimeMap) -> str:
    lines = [f'<{tm.uri_r}>; rel="original"']
    for rec in tm.mementos:
        lines.append(f'<{rec.uri_m}>; rel="memento"; datetime="{format_http_date(rec.memento_datetime)}"')
    return ",\n".join(lines) + "\n"


def fetch_timemap(
    archive: Archive,
    uri_r: CanonicalUrl | str,
    fetcher: Fetcher,
    policy: FetchPolicy | None = None,
) -> TimeMap:
    uri_r = canonicalize_url(uri_r)
    url = archive.timemap_url(uri_r)
    fixture = f"archives/{archive.id}/{uri_r.digest}.link"
    try:
        resp = fetcher.fetch(url, policy, fixture=fixture, headers={"Accept": "application/link-format"})
    except FetchError as exc:
        raise ArchiveUnreachable(archive.id, str(exc)) from exc
    if resp.status == 404:
        return TimeMap(uri_r, archive.id)
    if resp.status >= 400:
        raise ArchiveError(archive.id, resp.status)
    return parse_timemap(resp.text, uri_r, archive.id)


@dataclass
class AggregateResult:
    mementos: list[MementoRecord]
    errors: list[tuple[str, Exception]] = field(default_factory=list)
    per_archive: dict[str, int] = field(default_factory=dict)


def merge_mementos(timemaps: Iterable[TimeMap]) -> list[MementoRecord]:
    """Union on URI-M, keeping the earliest (then lowest archive id) record."""
    everything = sorted(
        (rec for tm in timemaps for rec in tm.mementos),
        key=lambda r: (r.memento_datetime, r.uri_m, r.archive_id),
    )
    seen: set[str] = set()
    merged = []
    for rec in everything:
        if rec.uri_m in seen:
            continue
        seen.add(rec.uri_m)
        merged.append(rec)
    return merged


def aggregate_timemaps(
    uri_r: CanonicalUrl | str,
    archives: Iterable[Archive],
    fetcher: Fetcher,
    policy: FetchPolicy | None = None,
    parallelism: int = DEFAULT_PARALLELISM,
) -> AggregateResult:
    archives = list(archives)
    if not archives:
        raise ValueError("at least one archive is required")
    uri_r = canonicalize_url(uri_r)
    policy = policy or FetchPolicy(timeout=DEFAULT_TIMEOUT)

    def one(archive: Archive):
        try:
            return archive, fetch_timemap(archive, uri_r, fetcher, policy), None
        except (ArchiveUnreachable, ArchiveError, TimeMapSyntaxError) as exc:
            log.warning("archive %s failed for %s: %s", archive.id, uri_r, exc)
            return archive, None, exc

    with ThreadPoolExecutor(max_workers=max(1, min(parallelism, len(archives)))) as pool:
        outcomes = list(pool.map(one, archives))

    timemaps = [tm for _, tm, _ in outcomes if tm is not None]
    errors = sorted(((a.id, exc) for a, _, exc in outcomes if exc is not None), key=lambda e: e[0])
    if len(errors) == len(archives):
        raise AllArchivesFailed(errors)
    return AggregateResult(
        mementos=merge_mementos(timemaps),
        errors=errors,
        per_archive={tm.archive_id: len(tm) for tm in sorted(timemaps, key=lambda t: t.archive_id)},
    )


def filter_mementos(mementos: Iterable[MementoRecord], lower_bound: dt.date) -> list[MementoRecord]:
    cutoff = dt.datetime.combine(lower_bound, dt.time(0, 0), tzinfo=dt.timezone.utc)
    return [m for m in mementos if m.memento_datetime >= cutoff]
