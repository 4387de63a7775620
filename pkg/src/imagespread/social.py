"""Social-media ingest: find posts that share a page URL.

Platforms have no image search, so each page URL found by reverse image
search is issued as a text query. Fixture layout::

    social/<platform>/<sha256(query)[:16]>/page-<n>.json

Payloads follow each platform's JSON API shape (Twitter v2 search, Reddit
listing), so recorded live responses and authored fixtures parse the same way.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from typing import Iterable
from urllib.parse import quote

from .errors import (
    AdapterParseError,
    CacheMiss,
    FetchError,
    PlatformUnavailable,
    UnattributedUrl,
)
from .fetch import Fetcher, FetchPolicy, Mode
from .model import Channel, ChannelEvent
from .urls import CanonicalUrl, canonicalize_url, url_hash

log = logging.getLogger(__name__)

DEFAULT_PAGE_CAP = 50
LIVE_MIN_DELAY = 2.0


@dataclass(frozen=True)
class SocialPost:
    platform: str
    post_id: str
    author_ref: str
    posted_at: dt.datetime
    matched_url: CanonicalUrl
    kind: str = "post"  # post | comment
    engagement: int | None = None


def author_ref(salt: str, platform: str, author: str) -> str:
    return hashlib.sha256(f"{salt}:{platform}:{author}".encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class RawPost:
    post_id: str
    author: str
    posted_at: dt.datetime
    kind: str
    engagement: int | None


class PlatformAdapter:
    id = ""

    def query_url(self, query: str, cursor: str | None) -> str:
        raise NotImplementedError

    def headers(self) -> dict:
        return {}

    def parse(self, body: bytes) -> tuple[list[RawPost], str | None]:
        raise NotImplementedError


def _load_json(platform: str, body: bytes):
    try:
        return json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise AdapterParseError(f"{platform}: payload is not JSON: {exc}") from exc


class TwitterAdapter(PlatformAdapter):
    id = "twitter"
    endpoint = "https://api.twitter.com/2/tweets/search/all"

    def query_url(self, query, cursor):
        term = quote('url:"%s"' % query, safe="")
        url = (
            f"{self.endpoint}?query={term}"
            "&max_results=100&tweet.fields=created_at,author_id,public_metrics,referenced_tweets"
        )
        return url + (f"&next_token={quote(cursor, safe='')}" if cursor else "")

    def headers(self):
        token = os.environ.get("TWITTER_BEARER_TOKEN")
        return {"Authorization": f"Bearer {token}"} if token else {}

    def parse(self, body):
        doc = _load_json(self.id, body)
        if not isinstance(doc, dict) or not isinstance(doc.get("meta", {}), dict):
            raise AdapterParseError("twitter: expected an object with 'data'/'meta'")
        posts = []
        try:
            for item in doc.get("data", []):
                refs = {r["type"] for r in item.get("referenced_tweets", [])}
                if "retweeted" in refs:
                    continue  # share timestamps are not modeled
                metrics = item.get("public_metrics") or {}
                posts.append(
                    RawPost(
                        post_id=str(item["id"]),
                        author=str(item["author_id"]),
                        posted_at=_iso(item["created_at"]),
                        kind="comment" if "replied_to" in refs else "post",
                        engagement=metrics.get("like_count"),
                    )
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise AdapterParseError(f"twitter: malformed tweet: {exc!r}") from exc
        return posts, doc.get("meta", {}).get("next_token")


class RedditAdapter(PlatformAdapter):
    id = "reddit"
    endpoint = "https://www.reddit.com/search.json"

    def query_url(self, query, cursor):
        url = f"{self.endpoint}?q={quote(query, safe='')}&limit=100&sort=new&type=link,comment"
        return url + (f"&after={quote(cursor, safe='')}" if cursor else "")

    def parse(self, body):
        doc = _load_json(self.id, body)
        try:
            listing = doc["data"]
            posts = []
            for child in listing["children"]:
                kind, data = child["kind"], child["data"]
                if kind not in ("t1", "t3"):
                    continue
                posts.append(
                    RawPost(
                        post_id=data.get("name") or f"{kind}_{data['id']}",
                        author=str(data.get("author", "[deleted]")),
                        posted_at=dt.datetime.fromtimestamp(float(data["created_utc"]), dt.timezone.utc),
                        kind="comment" if kind == "t1" else "post",
                        engagement=data.get("score"),
                    )
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise AdapterParseError(f"reddit: malformed listing: {exc!r}") from exc
        return posts, listing.get("after")


def _iso(text: str) -> dt.datetime:
    t = dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
    if t.tzinfo is None:
        raise ValueError(f"timestamp without zone: {text}")
    return t.astimezone(dt.timezone.utc)


ADAPTERS: dict[str, PlatformAdapter] = {a.id: a for a in (RedditAdapter(), TwitterAdapter())}


def query_fixture(platform: str, query: str, page: int) -> str:
    return f"social/{platform}/{url_hash(query)}/page-{page}.json"


def _run_query(adapter, query, fetcher, policy, max_pages) -> list[RawPost]:
    out: list[RawPost] = []
    cursor = None
    for page in range(1, max_pages + 1):
        url = adapter.query_url(query, cursor)
        try:
            resp = fetcher.fetch(url, policy, headers=adapter.headers(), fixture=query_fixture(adapter.id, query, page))
        except (CacheMiss, FetchError) as exc:
            raise PlatformUnavailable(f"{adapter.id}: {query}: {exc}") from exc
        if resp.status >= 400:
            raise PlatformUnavailable(f"{adapter.id}: {query}: HTTP {resp.status}")
        posts, cursor = adapter.parse(resp.body)
        out.extend(posts)
        if not cursor:
            break
    return out


def search_posts(
    platform: str,
    url: CanonicalUrl | str,
    fetcher: Fetcher,
    policy: FetchPolicy | None = None,
    *,
    raw: str | None = None,
    salt: str = "",
    max_pages: int = DEFAULT_PAGE_CAP,
) -> list[SocialPost]:
    """Posts whose text contains the page URL, oldest first.

    The canonical spelling is always queried; ``raw`` is queried as well when
    it differs. Results are merged on post id.
    """
    adapter = ADAPTERS.get(platform)
    if adapter is None:
        raise ValueError(f"unknown platform {platform!r}")
    url = canonicalize_url(url)
    policy = policy or FetchPolicy()
    if policy.mode != Mode.REPLAY and policy.min_delay < LIVE_MIN_DELAY:
        policy = FetchPolicy(policy.mode, policy.timeout, LIVE_MIN_DELAY)
    queries = [str(url)]
    if raw and raw.strip() != queries[0]:
        queries.append(raw.strip())
    by_id: dict[str, SocialPost] = {}
    for q in queries:
        for p in _run_query(adapter, q, fetcher, policy, max_pages):
            by_id.setdefault(
                p.post_id,
                SocialPost(
                    platform=platform,
                    post_id=p.post_id,
                    author_ref=author_ref(salt, platform, p.author),
                    posted_at=p.posted_at,
                    matched_url=url,
                    kind=p.kind,
                    engagement=p.engagement,
                ),
            )
    return sorted(by_id.values(), key=lambda p: (p.posted_at, p.post_id))


def filter_posts(posts: Iterable[SocialPost], lower_bound: dt.date) -> list[SocialPost]:
    cutoff = dt.datetime.combine(lower_bound, dt.time(0, 0), tzinfo=dt.timezone.utc)
    return [p for p in posts if p.posted_at >= cutoff]


def variants_by_url(hits) -> dict[CanonicalUrl, list[str]]:
    index: dict[CanonicalUrl, list[str]] = {}
    for hit in hits:
        ids = index.setdefault(hit.canonical_url, [])
        if hit.variant_id not in ids:
            ids.append(hit.variant_id)
    return {url: sorted(ids) for url, ids in index.items()}


def attribute_posts(posts: Iterable[SocialPost], hits) -> list[ChannelEvent]:
    """One event per (post, variant) pair; a page holding two variants counts for both."""
    index = variants_by_url(hits)
    events = []
    for post in posts:
        variants = index.get(post.matched_url)
        if not variants:
            raise UnattributedUrl(f"{post.platform} {post.post_id}: {post.matched_url} is not a hit URL")
        for vid in variants:
            events.append(
                ChannelEvent(vid, Channel(post.platform), post.matched_url, post.posted_at, post.post_id)
            )
    return events
