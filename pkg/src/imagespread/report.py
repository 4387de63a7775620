"""Report tables, charts and the run manifest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import svg
from .analytics import (
    BUCKETS,
    NewsDomainList,
    TimeSeries,
    classify_news,
    monthly_series,
    unique_page_counts,
)
from .model import Channel, ChannelEvent
from .records import write_csv
from .search import SearchHit

SERIES_CHANNELS = (Channel.TWITTER, Channel.REDDIT, Channel.ARCHIVE)
REPORT_CSVS = ("counts.csv", "news.csv", "series.csv", "totals.csv")
MANIFEST = "run-manifest.json"
_TITLES = {
    Channel.TWITTER: "Tweets sharing pages containing each variant",
    Channel.REDDIT: "Reddit posts and comments sharing pages containing each variant",
    Channel.ARCHIVE: "Mementos of pages containing each variant",
}


@dataclass
class ReportInputs:
    variants: list[str]
    engines: list[str]
    hits: list[SearchHit]  # deduped
    events: list[ChannelEvent]  # social and archive events, already date-bounded
    news: NewsDomainList | None = None
    granularity: str = "month"


@dataclass
class ReportTables:
    counts: list[dict] = field(default_factory=list)
    news: list[dict] = field(default_factory=list)
    series: list[TimeSeries] = field(default_factory=list)
    totals: list[dict] = field(default_factory=list)


def _order(known: list[str]):
    def key(value: str):
        return (known.index(value), value) if value in known else (len(known), value)

    return key


def build_tables(inputs: ReportInputs) -> ReportTables:
    vkey, ekey = _order(inputs.variants), _order(inputs.engines)
    unique = unique_page_counts(inputs.hits)
    matched = unique_page_counts(inputs.hits, matched_only=True)
    accepted = [h for h in inputs.hits if h.accepted]
    combos = sorted(unique, key=lambda k: (vkey(k[0]), ekey(k[1])))

    tables = ReportTables()
    for vid, engine in combos:
        tables.counts.append(
            {
                "variant_id": vid,
                "engine": engine,
                "unique_pages": unique[(vid, engine)],
                "matched_pages": matched.get((vid, engine), 0),
            }
        )
        news_pages = set()
        if inputs.news is not None:
            news_pages = {
                h.canonical_url
                for h in accepted
                if h.variant_id == vid and h.engine == engine and classify_news(h.canonical_url, inputs.news)
            }
        tables.news.append({"variant_id": vid, "engine": engine, "news_pages": len(news_pages)})

    variants = sorted({h.variant_id for h in inputs.hits} | {e.variant_id for e in inputs.events}, key=vkey)
    for vid in variants:
        pages = {h.canonical_url for h in accepted if h.variant_id == vid}
        if pages:
            tables.totals.append({"variant_id": vid, "channel": "search", "events": len(pages)})
        for channel in SERIES_CHANNELS:
            ts = monthly_series(inputs.events, vid, channel, inputs.granularity)
            if ts.points:
                tables.series.append(ts)
                tables.totals.append({"variant_id": vid, "channel": channel.value, "events": ts.total})
    return tables


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _charts(tables: ReportTables, inputs: ReportInputs) -> dict[str, str]:
    charts = {}
    if tables.counts:
        variants = list(dict.fromkeys(r["variant_id"] for r in tables.counts))
        engines = sorted({r["engine"] for r in tables.counts}, key=_order(inputs.engines))
        charts["counts.svg"] = svg.bar_chart(
            "Unique page URLs per search engine",
            variants,
            engines,
            {(r["variant_id"], r["engine"]): r["unique_pages"] for r in tables.counts},
            "unique pages",
        )
        if any(r["news_pages"] for r in tables.news):
            charts["news.svg"] = svg.bar_chart(
                "News-site pages per search engine",
                variants,
                engines,
                {(r["variant_id"], r["engine"]): r["news_pages"] for r in tables.news},
                "news pages",
            )
    for channel in SERIES_CHANNELS:
        series = [ts for ts in tables.series if ts.channel == channel]
        if not series:
            continue
        labels = sorted({label for ts in series for label, _ in ts.points})
        # series are gap-filled individually; pad to the shared axis
        full = _fill_axis(labels, inputs.granularity)
        lines = {}
        for ts in series:
            counts = dict(ts.points)
            lines[ts.variant_id] = [counts.get(label, 0) for label in full]
        charts[f"series-{channel.value}.svg"] = svg.line_chart(_TITLES[channel], full, lines, "events")
    return charts


def _fill_axis(labels: list[str], granularity: str) -> list[str]:
    step = BUCKETS[granularity][1]
    out = [labels[0]]
    while out[-1] != labels[-1]:
        out.append(step(out[-1]))
    return out


def emit_report(inputs: ReportInputs, outdir: str | Path, manifest: dict | None = None) -> dict:
    """Write CSVs, SVG charts and ``run-manifest.json``; returns the manifest.

    Bytes are a function of the inputs only, except the manifest's
    ``run_time`` entry.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    tables = build_tables(inputs)
    write_csv(out / "counts.csv", ["variant_id", "engine", "unique_pages", "matched_pages"], tables.counts)
    write_csv(out / "news.csv", ["variant_id", "engine", "news_pages"], tables.news)
    write_csv(
        out / "series.csv",
        ["variant_id", "channel", "month", "count"],
        (
            {"variant_id": ts.variant_id, "channel": ts.channel.value, "month": label, "count": count}
            for ts in tables.series
            for label, count in ts.points
        ),
    )
    write_csv(out / "totals.csv", ["variant_id", "channel", "events"], tables.totals)
    for stale in out.glob("*.svg"):
        stale.unlink()
    charts = _charts(tables, inputs)
    for name, text in sorted(charts.items()):
        _write(out / name, text)

    files = list(REPORT_CSVS) + sorted(charts)
    manifest = dict(manifest or {})
    manifest["report"] = {
        "granularity": inputs.granularity,
        "files": {name: hashlib.sha256((out / name).read_bytes()).hexdigest() for name in files},
        "series_argmax": {
            f"{ts.variant_id}/{ts.channel.value}": ts.argmax() for ts in tables.series
        },
    }
    _write(out / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest
