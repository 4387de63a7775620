"""Study stages: search, verify, social, archives, report.

Each stage reads its inputs from, and writes its outputs to, the output
directory, so stages can run one at a time or all together with the same
bytes as the result. Stage notes and errors go to ``state/<stage>.json`` and
are folded into the run manifest by the report stage.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .analytics import NewsDomainList
from .config import config_digest, load_study_config
from .errors import (
    AdapterParseError,
    AllArchivesFailed,
    EngineUnavailable,
    FetchError,
    MissingInput,
    PlatformUnavailable,
)
from .fetch import Fetcher, FetchPolicy, Mode, rfc3339
from .imagematch import crop_hashes, verify_page_contains_image
from .memento import aggregate_timemaps, filter_mementos
from .model import Channel, ChannelEvent, StudyConfig
from .records import (
    HITS_COLUMNS,
    MEMENTOS_COLUMNS,
    POSTS_COLUMNS,
    VERIFICATION_COLUMNS,
    hit_rows,
    memento_rows,
    post_rows,
    read_csv,
    read_hits,
    read_mementos,
    read_post_events,
    write_csv,
)
from .report import ReportInputs, emit_report
from .search import dedupe_hits, run_reverse_search, thumbnail_name
from .social import attribute_posts, search_posts, variants_by_url

STAGES = ("search", "verify", "social", "archives", "report")
CACHE_ENV = "IMAGESPREAD_CACHE_DIR"


@dataclass
class RunContext:
    config: StudyConfig
    config_path: Path
    outdir: Path
    fetcher: Fetcher
    mode: Mode = Mode.REPLAY
    max_pages: int = 10
    threshold: int = 10
    since: dt.date = dt.date(2020, 1, 30)
    timeout: float = 30.0

    def policy(self, min_delay: float = 0.0) -> FetchPolicy:
        return FetchPolicy(self.mode, self.timeout, min_delay)

    def log(self, stage: str) -> logging.Logger:
        return logging.getLogger(f"imagespread.{stage}")


@dataclass
class StageResult:
    stage: str
    errors: list[str] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def partial(self) -> bool:
        return bool(self.errors)


def make_context(
    config_path: str | Path,
    outdir: str | Path,
    mode: Mode | str = Mode.REPLAY,
    *,
    max_pages: int | None = None,
    threshold: int | None = None,
    since: dt.date | None = None,
    cache_dir: str | Path | None = None,
    transport=None,
) -> RunContext:
    config_path = Path(config_path)
    cfg = load_study_config(config_path)
    cache_dir = cache_dir or os.environ.get(CACHE_ENV) or config_path.resolve().parent / "cache"
    return RunContext(
        config=cfg,
        config_path=config_path,
        outdir=Path(outdir),
        fetcher=Fetcher(cache_dir=cache_dir, fixture_root=cfg.fixtures, transport=transport),
        mode=Mode(mode),
        max_pages=max_pages if max_pages is not None else cfg.max_pages,
        threshold=threshold if threshold is not None else cfg.match_threshold,
        since=since or cfg.date_lower_bound,
    )


def _save_state(ctx: RunContext, result: StageResult) -> None:
    path = ctx.outdir / "state" / f"{result.stage}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"stage": result.stage, "errors": result.errors, "notes": result.notes}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_states(ctx: RunContext) -> dict:
    states = {}
    for stage in STAGES:
        path = ctx.outdir / "state" / f"{stage}.json"
        if path.is_file():
            states[stage] = json.loads(path.read_text("utf-8"))
    return states


def _accepted_hits(ctx: RunContext):
    return [h for h in read_hits(ctx.outdir / "hits.csv") if h.accepted]


def _variant_order(ctx: RunContext):
    ids = [v.id for v in ctx.config.variants]
    return lambda vid: (ids.index(vid) if vid in ids else len(ids), vid)


def stage_search(ctx: RunContext) -> StageResult:
    log = ctx.log("search")
    result = StageResult("search")
    hits = []
    for variant in ctx.config.variants:
        query = crop_hashes(variant.read_bytes())
        for engine in ctx.config.engines:
            try:
                found = run_reverse_search(
                    engine, variant, ctx.fetcher, ctx.max_pages, ctx.threshold, ctx.policy(), query
                )
            except EngineUnavailable as exc:
                log.warning("%s", exc)
                result.errors.append(f"{engine}/{variant.id}: {exc}")
                continue
            hits.extend(found)
    unique = dedupe_hits(hits)
    thumb_paths = {}
    for i, hit in enumerate(unique):
        if hit.thumbnail is not None:
            name = thumbnail_name(hit.thumbnail)
            path = ctx.outdir / name
            if not path.is_file():
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_bytes(hit.thumbnail)
            thumb_paths[i] = name
    write_csv(ctx.outdir / "hits.csv", HITS_COLUMNS, hit_rows(unique, thumb_paths))
    result.notes = {
        "hits_returned": len(hits),
        "unique_hits": len(unique),
        "matched": sum(1 for h in unique if h.matched is True),
        "rejected": sum(1 for h in unique if h.matched is False),
        "unchecked": sum(1 for h in unique if h.matched is None),
    }
    log.info("%d unique hits (%d returned)", len(unique), len(hits))
    return result


def stage_verify(ctx: RunContext) -> StageResult:
    """Check that each accepted page still embeds its variant image."""
    log = ctx.log("verify")
    result = StageResult("verify")
    hits = _accepted_hits(ctx)
    pairs = sorted({(h.variant_id, h.canonical_url) for h in hits}, key=lambda p: (_variant_order(ctx)(p[0]), str(p[1])))
    queries = {}
    policy = ctx.policy()

    def fetch_image(url: str) -> bytes:
        return ctx.fetcher.get_bytes(url, policy)

    rows = []
    verified = {}
    for vid, url in pairs:
        if vid not in queries:
            queries[vid] = crop_hashes(ctx.config.variant(vid).read_bytes())
        row = {"variant_id": vid, "canonical_url": str(url), "verified": "false", "evidence_url": "",
               "failures": 0, "checked": 0}
        try:
            resp = ctx.fetcher.fetch(str(url), policy)
        except FetchError as exc:
            log.debug("page %s unavailable: %s", url, exc)
            row["status"] = "page-unavailable"
            rows.append(row)
            continue
        if resp.status >= 400:
            row["status"] = f"http-{resp.status}"
            rows.append(row)
            continue
        outcome = verify_page_contains_image(resp.text, url, queries[vid], fetch_image, ctx.threshold)
        row.update(
            status="ok",
            verified="true" if outcome.verified else "false",
            evidence_url=str(outcome.evidence_url or ""),
            failures=outcome.failures,
            checked=outcome.checked,
        )
        if outcome.verified:
            verified[vid] = verified.get(vid, 0) + 1
        rows.append(row)
    write_csv(ctx.outdir / "verification.csv", VERIFICATION_COLUMNS, rows)
    result.notes = {"pages": len(pairs), "verified": dict(sorted(verified.items()))}
    log.info("%d of %d pages verified", sum(verified.values()), len(pairs))
    return result


def stage_social(ctx: RunContext) -> StageResult:
    log = ctx.log("social")
    result = StageResult("social")
    hits = _accepted_hits(ctx)
    raw_spelling: dict = {}
    for h in hits:
        if h.page_url.strip() != str(h.canonical_url):
            raw_spelling.setdefault(h.canonical_url, h.page_url)
    urls = sorted({h.canonical_url for h in hits}, key=str)
    posts = []
    coverage = {}
    for platform in ctx.config.platforms:
        found = []
        for url in urls:
            try:
                found.extend(
                    search_posts(
                        platform, url, ctx.fetcher, ctx.policy(),
                        raw=raw_spelling.get(url), salt=ctx.config.author_salt,
                    )
                )
            except (PlatformUnavailable, AdapterParseError) as exc:
                log.warning("%s", exc)
                result.errors.append(f"{platform} {url}: {exc}")
        seen = set()
        for p in found:
            if p.post_id not in seen:
                seen.add(p.post_id)
                posts.append(p)
        times = [p.posted_at for p in found]
        coverage[platform] = {
            "posts": len(seen),
            "first": rfc3339(min(times)) if times else None,
            "last": rfc3339(max(times)) if times else None,
        }
    events = attribute_posts(posts, hits)
    by_key = {(p.platform, p.post_id): p for p in posts}
    vkey = _variant_order(ctx)
    events.sort(key=lambda e: (vkey(e.variant_id), e.channel.value, e.timestamp, e.detail))
    write_csv(ctx.outdir / "posts.csv", POSTS_COLUMNS, post_rows(events, by_key))
    result.notes = {"coverage": coverage, "events": len(events), "queried_urls": len(urls)}
    log.info("%d posts, %d attributed events", len(posts), len(events))
    return result


def stage_archives(ctx: RunContext) -> StageResult:
    log = ctx.log("archives")
    result = StageResult("archives")
    hits = _accepted_hits(ctx)
    urls = sorted({h.canonical_url for h in hits}, key=str)
    archives = list(ctx.config.archives)
    records = []
    per_archive: dict[str, int] = {}
    if not archives:
        log.warning("no archives configured")
    for url in urls if archives else []:
        try:
            agg = aggregate_timemaps(url, archives, ctx.fetcher, ctx.policy())
        except AllArchivesFailed as exc:
            for archive_id, err in exc.errors:
                result.errors.append(f"{archive_id} {url}: {err}")
            continue
        for archive_id, err in agg.errors:
            result.errors.append(f"{archive_id} {url}: {err}")
        for archive_id, n in agg.per_archive.items():
            per_archive[archive_id] = per_archive.get(archive_id, 0) + n
        records.extend(agg.mementos)
    records.sort(key=lambda r: (str(r.uri_r), r.memento_datetime, r.uri_m))
    write_csv(ctx.outdir / "mementos.csv", MEMENTOS_COLUMNS, memento_rows(records))
    result.notes = {
        "archives": [{"id": a.id, "timemap": a.timemap} for a in archives],
        "mementos": len(records),
        "per_archive": dict(sorted(per_archive.items())),
        "queried_urls": len(urls),
    }
    log.info("%d mementos for %d pages", len(records), len(urls))
    return result


def _cutoff(day: dt.date) -> dt.datetime:
    return dt.datetime.combine(day, dt.time(0, 0), tzinfo=dt.timezone.utc)


def stage_report(ctx: RunContext, started_at: dt.datetime | None = None) -> StageResult:
    log = ctx.log("report")
    started_at = started_at or dt.datetime.now(dt.timezone.utc)
    for name in ("hits.csv", "posts.csv", "mementos.csv"):
        if not (ctx.outdir / name).is_file():
            raise MissingInput(ctx.outdir / name)
    hits = read_hits(ctx.outdir / "hits.csv")
    accepted = [h for h in hits if h.accepted]
    owners = variants_by_url(accepted)

    cutoff = _cutoff(ctx.since)
    events = [e for e in read_post_events(ctx.outdir / "posts.csv") if e.timestamp >= cutoff]
    mementos = filter_mementos(read_mementos(ctx.outdir / "mementos.csv"), ctx.since)
    orphans = 0
    for m in mementos:
        variants = owners.get(m.uri_r)
        if not variants:
            orphans += 1
            continue
        events.extend(ChannelEvent(vid, Channel.ARCHIVE, m.uri_r, m.memento_datetime, m.uri_m) for vid in variants)
    if orphans:
        log.warning("%d mementos belong to no accepted page", orphans)

    cfg = ctx.config
    news = NewsDomainList.load(cfg.news_domain_list_path) if cfg.news_domain_list_path else None
    states = _load_states(ctx)
    verification = ctx.outdir / "verification.csv"
    manifest = {
        "tool": {"name": "imagespread", "version": __version__},
        "study": cfg.name,
        "config_sha256": config_digest(ctx.config_path),
        "mode": ctx.mode.value,
        "date_lower_bound": ctx.since.isoformat(),
        "seed_window": [d.isoformat() for d in cfg.seed_window] if cfg.seed_window else None,
        "match_threshold": ctx.threshold,
        "max_pages": ctx.max_pages,
        "variants": [v.id for v in cfg.variants],
        "engines": list(cfg.engines),
        "platforms": list(cfg.platforms),
        "archives": [{"id": a.id, "timemap": a.timemap} for a in cfg.archives],
        "coverage": states.get("social", {}).get("notes", {}).get("coverage", {}),
        "stages": states,
        "counts": {
            "unique_hits": len(hits),
            "accepted_hits": len(accepted),
            "social_events": sum(1 for e in events if e.channel != Channel.ARCHIVE),
            "archive_events": sum(1 for e in events if e.channel == Channel.ARCHIVE),
            "verified_pages": sum(1 for r in read_csv(verification) if r["verified"] == "true")
            if verification.is_file()
            else None,
        },
        "run_time": {"started_at": rfc3339(started_at), "finished_at": None},
    }
    inputs = ReportInputs(
        variants=[v.id for v in cfg.variants],
        engines=list(cfg.engines),
        hits=hits,
        events=events,
        news=news,
        granularity=cfg.granularity,
    )
    manifest["run_time"]["finished_at"] = rfc3339(dt.datetime.now(dt.timezone.utc))
    emit_report(inputs, ctx.outdir, manifest)
    log.info("report written to %s", ctx.outdir)
    return StageResult("report", notes={"events": len(events)})


STAGE_FUNCS = {
    "search": stage_search,
    "verify": stage_verify,
    "social": stage_social,
    "archives": stage_archives,
    "report": stage_report,
}


def run_stage(ctx: RunContext, stage: str) -> StageResult:
    result = STAGE_FUNCS[stage](ctx)
    if stage != "report":
        _save_state(ctx, result)
    return result


def run_all(ctx: RunContext) -> list[StageResult]:
    started = dt.datetime.now(dt.timezone.utc)
    results = []
    for stage in STAGES[:-1]:
        results.append(run_stage(ctx, stage))
    results.append(stage_report(ctx, started_at=started))
    return results
