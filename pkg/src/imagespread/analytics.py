"""Counts and time series derived from hits, posts and mementos."""

from __future__ import annotations

import datetime as dt
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable
from urllib.parse import urlsplit

from .model import Channel, ChannelEvent
from .psl import registrable_domain
from .urls import CanonicalUrl


def month_bucket(t: dt.datetime) -> str:
    t = t.astimezone(dt.timezone.utc) if t.tzinfo else t
    return f"{t.year:04d}-{t.month:02d}"


def week_bucket(t: dt.datetime) -> str:
    t = t.astimezone(dt.timezone.utc) if t.tzinfo else t
    year, week, _ = t.isocalendar()
    return f"{year:04d}-W{week:02d}"


def _next_month(label: str) -> str:
    y, m = map(int, label.split("-"))
    return f"{y + m // 12:04d}-{m % 12 + 1:02d}"


def _next_week(label: str) -> str:
    y, w = label.split("-W")
    monday = dt.date.fromisocalendar(int(y), int(w), 1) + dt.timedelta(days=7)
    iy, iw, _ = monday.isocalendar()
    return f"{iy:04d}-W{iw:02d}"


BUCKETS = {"month": (month_bucket, _next_month), "week": (week_bucket, _next_week)}


@dataclass(frozen=True)
class TimeSeries:
    variant_id: str
    channel: Channel
    points: tuple[tuple[str, int], ...]

    @property
    def total(self) -> int:
        return sum(c for _, c in self.points)

    def argmax(self) -> str | None:
        if not self.points:
            return None
        best = max(c for _, c in self.points)
        return next(label for label, c in self.points if c == best)


def monthly_series(
    events: Iterable[ChannelEvent],
    variant: str,
    channel: Channel | str,
    granularity: str = "month",
) -> TimeSeries:
    """Bucket timestamped events; empty buckets between first and last are kept as 0."""
    channel = Channel(channel)
    bucket, step = BUCKETS[granularity]
    counts = Counter(
        bucket(e.timestamp)
        for e in events
        if e.variant_id == variant and e.channel == channel and e.timestamp is not None
    )
    if not counts:
        return TimeSeries(variant, channel, ())
    labels = sorted(counts)
    points = []
    label = labels[0]
    while True:
        points.append((label, counts.get(label, 0)))
        if label == labels[-1]:
            break
        label = step(label)
    return TimeSeries(variant, channel, tuple(points))


def unique_page_counts(hits, matched_only: bool = False) -> dict[tuple[str, str], int]:
    pages: dict[tuple[str, str], set] = {}
    for h in hits:
        if matched_only and h.matched is not True:
            continue
        pages.setdefault((h.variant_id, h.engine), set()).add(h.canonical_url)
    return {key: len(urls) for key, urls in sorted(pages.items())}


@dataclass(frozen=True)
class NewsDomainList:
    domains: frozenset[str]

    def __contains__(self, domain: str) -> bool:
        return domain in self.domains

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "NewsDomainList":
        domains = set()
        for line in lines:
            entry = line.split("#", 1)[0].strip().lower()
            if not entry:
                continue
            if "://" in entry:
                entry = urlsplit(entry).hostname or ""
            entry = entry.split("/", 1)[0].split(":", 1)[0].rstrip(".")
            if entry:
                domains.add(registrable_domain(entry) or entry)
        return cls(frozenset(domains))

    @classmethod
    def load(cls, path: str | Path) -> "NewsDomainList":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)


def classify_news(url: CanonicalUrl, news: NewsDomainList) -> bool:
    domain = registrable_domain(url.host)
    return domain is not None and domain in news


def news_page_counts(hits, news: NewsDomainList) -> dict[tuple[str, str], int]:
    pages: dict[tuple[str, str], set] = {}
    for h in hits:
        key = (h.variant_id, h.engine)
        pages.setdefault(key, set())
        if classify_news(h.canonical_url, news):
            pages[key].add(h.canonical_url)
    return {key: len(urls) for key, urls in sorted(pages.items())}


def news_pages_by_variant(hits, news: NewsDomainList) -> dict[str, int]:
    """Distinct news pages per variant across all engines."""
    pages: dict[str, set] = {}
    for h in hits:
        if classify_news(h.canonical_url, news):
            pages.setdefault(h.variant_id, set()).add(h.canonical_url)
    return {vid: len(urls) for vid, urls in sorted(pages.items())}
