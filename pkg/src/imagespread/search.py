"""Reverse image search ingest.

Each engine is an adapter that knows how to submit an image, parse one
result page into "pages containing this image" entries (similar-image
sections are ignored) and find the next result page.

Fixture layout, relative to the study's fixture root::

    engines/<engine>/<variant_id>/page-<n>.html
    engines/<engine>/<variant_id>/thumbs/<sha256(thumbnail url)[:16]>.jpg

Result-page selectors per adapter (documented here because fixtures must
follow them):

=======  ==========================================  ===========================
engine   page entry                                  next page
=======  ==========================================  ===========================
bing     ``#insights-root .pages-including li``      ``a.pi-next[href]``
         link ``a.pi-link``, thumb ``img.pi-thumb``
google   ``#search #pages-with-image div.g``         ``a#pnnext[href]``
         link first ``a[href]``, thumb ``img.thumb``
baidu    ``.graph-same-list .graph-same-list-item``  ``a.graph-page-next[href]``
         link ``a.graph-same-list-link``, thumb img
=======  ==========================================  ===========================
"""

from __future__ import annotations

import base64
import datetime as dt
import hashlib
import logging
from dataclasses import dataclass
from typing import Iterable
from urllib.parse import urljoin, urlsplit

from bs4 import BeautifulSoup
from urllib3 import encode_multipart_formdata

from .errors import (
    AdapterParseError,
    CacheMiss,
    CaptchaDetected,
    EngineUnavailable,
    FetchError,
    ImageSpreadError,
    MalformedUrl,
)
from .fetch import Fetcher, FetchPolicy, Mode
from .imagematch import Hash64, MatchResult, crop_hashes, match_thumbnail
from .model import ImageVariant
from .urls import CanonicalUrl, canonicalize_url, url_hash

log = logging.getLogger(__name__)

LIVE_MIN_DELAY = 2.0
_MULTIPART_BOUNDARY = "imagespread-boundary-7d1f"


@dataclass(frozen=True)
class ResultEntry:
    page_url: str
    thumbnail_ref: str | None


@dataclass(frozen=True)
class ResultPage:
    entries: tuple[ResultEntry, ...]
    next_url: str | None


@dataclass(frozen=True)
class SearchHit:
    variant_id: str
    engine: str
    page_url: str
    canonical_url: CanonicalUrl
    retrieved_at: dt.datetime
    thumbnail: bytes | None = None
    thumbnail_url: str | None = None
    match: MatchResult | None = None

    @property
    def matched(self) -> bool | None:
        return None if self.match is None else self.match.matched

    @property
    def accepted(self) -> bool:
        """Not rejected by the thumbnail check (unchecked hits stay in)."""
        return self.matched is not False


def _resolve(base: str, ref: str) -> str:
    # absolute links keep the engine's spelling; it is queried on social platforms
    ref = ref.strip()
    return ref if urlsplit(ref).scheme else urljoin(base, ref)


class EngineAdapter:
    id: str = ""
    base_url: str = ""
    upload_url: str = ""
    upload_field: str = "image"
    captcha_markers: tuple[str, ...] = ()

    root_selector = ""
    entry_selector = ""
    link_selector = ""
    thumb_selector = "img"
    next_selector = ""

    def submit_request(self, image: bytes) -> tuple[str, bytes, dict]:
        body, content_type = encode_multipart_formdata(
            {self.upload_field: ("query.png", image, "application/octet-stream")},
            boundary=_MULTIPART_BOUNDARY,
        )
        return self.upload_url, body, {"Content-Type": content_type}

    def looks_like_captcha(self, body: bytes) -> bool:
        text = body.decode("utf-8", errors="replace").lower()
        return any(marker in text for marker in self.captcha_markers)

    def parse(self, body: bytes) -> ResultPage:
        try:
            text = body.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise AdapterParseError(f"{self.id}: result page is not UTF-8 text") from exc
        soup = BeautifulSoup(text, "html.parser")
        root = soup.select_one(self.root_selector)
        if root is None:
            raise AdapterParseError(f"{self.id}: result container {self.root_selector!r} not found")
        entries = []
        for item in root.select(self.entry_selector):
            link = item.select_one(self.link_selector)
            if link is None or not link.get("href"):
                continue
            thumb = item.select_one(self.thumb_selector)
            src = thumb.get("src") if thumb is not None else None
            entries.append(
                ResultEntry(
                    page_url=_resolve(self.base_url, link["href"]),
                    thumbnail_ref=_resolve(self.base_url, src) if src else None,
                )
            )
        nxt = root.select_one(self.next_selector)
        next_url = _resolve(self.base_url, nxt["href"]) if nxt is not None and nxt.get("href") else None
        return ResultPage(tuple(entries), next_url)


class BingAdapter(EngineAdapter):
    id = "bing"
    base_url = "https://www.bing.com/"
    upload_url = "https://www.bing.com/images/search?view=detailv2&iss=sbiupload"
    upload_field = "imageBin"
    captcha_markers = ("captcha", "/turing/")
    root_selector = "#insights-root"
    entry_selector = ".pages-including li"
    link_selector = "a.pi-link"
    thumb_selector = "img.pi-thumb"
    next_selector = "a.pi-next"

    def submit_request(self, image: bytes) -> tuple[str, bytes, dict]:
        # Bing expects the upload field base64-encoded.
        return super().submit_request(base64.b64encode(image))


class GoogleAdapter(EngineAdapter):
    id = "google"
    base_url = "https://www.google.com/"
    upload_url = "https://www.google.com/searchbyimage/upload"
    upload_field = "encoded_image"
    captcha_markers = ("/sorry/index", "captcha-form", "unusual traffic")
    root_selector = "#search"
    entry_selector = "#pages-with-image div.g"
    link_selector = "a[href]"
    thumb_selector = "img.thumb"
    next_selector = "a#pnnext"


class BaiduAdapter(EngineAdapter):
    id = "baidu"
    base_url = "https://graph.baidu.com/"
    upload_url = "https://graph.baidu.com/upload"
    captcha_markers = ("wappass.baidu.com", "安全验证")
    root_selector = ".graph-container"
    entry_selector = ".graph-same-list .graph-same-list-item"
    link_selector = "a.graph-same-list-link"
    thumb_selector = "img"
    next_selector = "a.graph-page-next"


ADAPTERS: dict[str, EngineAdapter] = {a.id: a for a in (BaiduAdapter(), BingAdapter(), GoogleAdapter())}


def get_adapter(engine: str) -> EngineAdapter:
    try:
        return ADAPTERS[engine]
    except KeyError:
        raise ValueError(f"unknown engine {engine!r}") from None


def parse_engine_results(engine: str, body: bytes) -> list[ResultEntry]:
    return list(get_adapter(engine).parse(body).entries)


def fixture_dir(engine: str, variant_id: str) -> str:
    return f"engines/{engine}/{variant_id}"


def thumb_fixture(engine: str, variant_id: str, thumb_url: str) -> str:
    return f"{fixture_dir(engine, variant_id)}/thumbs/{url_hash(thumb_url)}.jpg"


def run_reverse_search(
    engine: str,
    variant: ImageVariant,
    fetcher: Fetcher,
    max_pages: int = 10,
    threshold: int = 10,
    policy: FetchPolicy | None = None,
    query_hashes: list[Hash64] | None = None,
) -> list[SearchHit]:
    """Submit one variant to one engine and collect its hits, page by page.

    Hits whose thumbnail fails the match are kept with ``matched=False``.
    """
    adapter = get_adapter(engine)
    policy = policy or FetchPolicy()
    if policy.mode != Mode.REPLAY and policy.min_delay < LIVE_MIN_DELAY:
        policy = FetchPolicy(policy.mode, policy.timeout, LIVE_MIN_DELAY)
    image = variant.read_bytes()
    query = query_hashes or crop_hashes(image)
    base = fixture_dir(engine, variant.id)

    hits: list[SearchHit] = []
    url, data, headers = adapter.submit_request(image)
    method = "POST"
    for page_no in range(1, max_pages + 1):
        try:
            resp = fetcher.fetch(
                url, policy, method=method, data=data, headers=headers, fixture=f"{base}/page-{page_no}.html"
            )
        except (CacheMiss, FetchError) as exc:
            raise EngineUnavailable(f"{engine}: page {page_no}: {exc}") from exc
        if resp.status >= 400:
            raise EngineUnavailable(f"{engine}: page {page_no}: HTTP {resp.status}")
        if policy.mode != Mode.REPLAY and adapter.looks_like_captcha(resp.body):
            raise CaptchaDetected(f"{engine}: captcha on page {page_no}")
        page = adapter.parse(resp.body)
        for entry in page.entries:
            hit = _make_hit(adapter, variant, entry, resp.fetched_at, fetcher, policy, query, threshold)
            if hit is not None:
                hits.append(hit)
        if page.next_url is None:
            break
        url, method, data, headers = page.next_url, "GET", None, None
    log.info("%s/%s: %d hits", engine, variant.id, len(hits))
    return hits


def _make_hit(adapter, variant, entry, retrieved_at, fetcher, policy, query, threshold):
    try:
        canonical = canonicalize_url(entry.page_url)
    except MalformedUrl:
        log.warning("%s: skipping unusable page URL %r", adapter.id, entry.page_url)
        return None
    thumbnail = match = None
    if entry.thumbnail_ref:
        try:
            thumbnail = fetcher.get_bytes(
                entry.thumbnail_ref,
                policy,
                fixture=thumb_fixture(adapter.id, variant.id, entry.thumbnail_ref),
            )
        except ImageSpreadError as exc:
            log.warning("%s: thumbnail %s unavailable: %s", adapter.id, entry.thumbnail_ref, exc)
        if thumbnail is not None:
            try:
                match = match_thumbnail(query, thumbnail, threshold)
            except ImageSpreadError as exc:
                log.warning("%s: thumbnail %s undecodable: %s", adapter.id, entry.thumbnail_ref, exc)
    return SearchHit(
        variant_id=variant.id,
        engine=adapter.id,
        page_url=entry.page_url,
        canonical_url=canonical,
        retrieved_at=retrieved_at,
        thumbnail=thumbnail,
        thumbnail_url=entry.thumbnail_ref,
        match=match,
    )


def dedupe_hits(hits: Iterable[SearchHit]) -> list[SearchHit]:
    seen = set()
    out = []
    for hit in hits:
        key = (hit.engine, hit.variant_id, hit.canonical_url)
        if key in seen:
            continue
        seen.add(key)
        out.append(hit)
    return out


def thumbnail_name(data: bytes) -> str:
    return f"thumbs/{hashlib.sha256(data).hexdigest()[:16]}.jpg"
