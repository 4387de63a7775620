"""CSV files exchanged between stages (hits, posts, mementos, verification)."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable

from .errors import MissingInput
from .fetch import parse_rfc3339, rfc3339
from .imagematch import MatchResult
from .memento import MementoRecord
from .model import Channel, ChannelEvent
from .search import SearchHit
from .urls import canonicalize_url

HITS_COLUMNS = [
    "variant_id",
    "engine",
    "page_url",
    "canonical_url",
    "thumbnail_path",
    "match_distance",
    "matched",
    "retrieved_at",
]
POSTS_COLUMNS = [
    "variant_id",
    "platform",
    "kind",
    "post_id",
    "author_ref",
    "posted_at",
    "canonical_url",
    "engagement",
]
MEMENTOS_COLUMNS = ["uri_r", "archive_id", "uri_m", "memento_datetime"]
VERIFICATION_COLUMNS = ["variant_id", "canonical_url", "status", "verified", "evidence_url", "failures", "checked"]


def write_csv(path: Path, columns: list[str], rows: Iterable[dict]) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path: Path) -> list[dict]:
    if not path.is_file():
        raise MissingInput(path)
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _bool(value: bool | None) -> str:
    return "" if value is None else ("true" if value else "false")


def _parse_bool(text: str) -> bool | None:
    return None if text == "" else text == "true"


def hit_rows(hits: Iterable[SearchHit], thumb_paths: dict[int, str] | None = None):
    for i, h in enumerate(hits):
        yield {
            "variant_id": h.variant_id,
            "engine": h.engine,
            "page_url": h.page_url,
            "canonical_url": str(h.canonical_url),
            "thumbnail_path": (thumb_paths or {}).get(i, ""),
            "match_distance": "" if h.match is None else h.match.distance,
            "matched": _bool(h.matched),
            "retrieved_at": rfc3339(h.retrieved_at),
        }


def read_hits(path: Path) -> list[SearchHit]:
    hits = []
    for row in read_csv(path):
        match = None
        if row["match_distance"] != "":
            match = MatchResult(int(row["match_distance"]), row["matched"] == "true", "")
        hits.append(
            SearchHit(
                variant_id=row["variant_id"],
                engine=row["engine"],
                page_url=row["page_url"],
                canonical_url=canonicalize_url(row["canonical_url"]),
                retrieved_at=parse_rfc3339(row["retrieved_at"]),
                match=match,
            )
        )
    return hits


def post_rows(events: Iterable[ChannelEvent], posts_by_key: dict):
    for e in events:
        p = posts_by_key[(e.channel.value, e.detail)]
        yield {
            "variant_id": e.variant_id,
            "platform": p.platform,
            "kind": p.kind,
            "post_id": p.post_id,
            "author_ref": p.author_ref,
            "posted_at": rfc3339(p.posted_at),
            "canonical_url": str(p.matched_url),
            "engagement": "" if p.engagement is None else p.engagement,
        }


def read_post_events(path: Path) -> list[ChannelEvent]:
    return [
        ChannelEvent(
            variant_id=row["variant_id"],
            channel=Channel(row["platform"]),
            canonical_url=canonicalize_url(row["canonical_url"]),
            timestamp=parse_rfc3339(row["posted_at"]),
            detail=row["post_id"],
        )
        for row in read_csv(path)
    ]


def memento_rows(records: Iterable[MementoRecord]):
    for r in records:
        yield {
            "uri_r": str(r.uri_r),
            "archive_id": r.archive_id,
            "uri_m": r.uri_m,
            "memento_datetime": rfc3339(r.memento_datetime),
        }


def read_mementos(path: Path) -> list[MementoRecord]:
    return [
        MementoRecord(
            uri_r=canonicalize_url(row["uri_r"]),
            uri_m=row["uri_m"],
            archive_id=row["archive_id"],
            memento_datetime=parse_rfc3339(row["memento_datetime"]),
        )
        for row in read_csv(path)
    ]
