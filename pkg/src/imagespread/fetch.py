"""The one HTTP access path: content-addressed cache, per-host pacing, replay.

Cache layout (also used for generic fixtures under ``<fixtures>/web``)::

    <root>/<first 2 hex>/<sha256 key>.body
    <root>/<first 2 hex>/<sha256 key>.meta.json   # url, status, headers, fetched_at, sha256

The key is ``sha256(url)`` for GET; other methods hash the method, URL and
request-body digest together.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable
from urllib.parse import urlsplit

from .errors import CacheMiss, FetchError, FetchTimeout, HttpError

log = logging.getLogger(__name__)

HOP_BY_HOP = frozenset(
    {
        "connection",
        "keep-alive",
        "proxy-authenticate",
        "proxy-authorization",
        "te",
        "trailer",
        "trailers",
        "transfer-encoding",
        "upgrade",
    }
)
# requests hands back decoded bodies, so these no longer describe stored bytes.
_BODY_FRAMING = frozenset({"content-encoding", "content-length"})

USER_AGENT = "imagespread/0.1 (+research crawler)"
EPOCH = dt.datetime(1970, 1, 1, tzinfo=dt.timezone.utc)


class Mode(str, Enum):
    LIVE = "live"
    REPLAY = "replay"
    RECORD = "record"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FetchPolicy:
    mode: Mode = Mode.REPLAY
    timeout: float = 30.0
    min_delay: float = 0.0


@dataclass(frozen=True)
class CachedResponse:
    url: str
    status: int
    headers: tuple[tuple[str, str], ...]
    body: bytes
    fetched_at: dt.datetime
    source: str  # live | cache | fixture

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 400

    def header(self, name: str) -> str | None:
        name = name.lower()
        for k, v in self.headers:
            if k.lower() == name:
                return v
        return None

    @property
    def text(self) -> str:
        return self.body.decode("utf-8", errors="replace")

    def raise_for_status(self) -> "CachedResponse":
        if self.status >= 400:
            raise HttpError(self.url, self.status)
        return self


Transport = Callable[[str, str, "bytes | None", dict, float], "tuple[int, list, bytes]"]


def requests_transport(method, url, data, headers, timeout):
    import requests

    try:
        r = requests.request(method, url, data=data, headers=headers, timeout=timeout)
    except requests.Timeout as exc:
        raise FetchTimeout(url, str(exc)) from exc
    except requests.RequestException as exc:
        raise FetchError(url, str(exc)) from exc
    return r.status_code, list(r.headers.items()), r.content


def cache_key(url: str, method: str = "GET", data: bytes | None = None) -> str:
    if method.upper() == "GET" and not data:
        material = url
    else:
        digest = hashlib.sha256(data or b"").hexdigest()
        material = f"{method.upper()} {url} {digest}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def rfc3339(t: dt.datetime) -> str:
    return t.astimezone(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_rfc3339(text: str) -> dt.datetime:
    t = dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
    if t.tzinfo is None:
        t = t.replace(tzinfo=dt.timezone.utc)
    return t.astimezone(dt.timezone.utc)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def store_entry(root: Path, key: str, response: CachedResponse) -> Path:
    """Persist a response in the cache layout; the meta file is written last."""
    shard = Path(root) / key[:2]
    headers = [[k, v] for k, v in response.headers if k.lower() not in HOP_BY_HOP]
    meta = {
        "url": response.url,
        "status": response.status,
        "headers": headers,
        "fetched_at": rfc3339(response.fetched_at),
        "sha256": hashlib.sha256(response.body).hexdigest(),
    }
    _atomic_write(shard / f"{key}.body", response.body)
    _atomic_write(shard / f"{key}.meta.json", (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode())
    return shard / f"{key}.body"


def _with_source(response: CachedResponse, source: str) -> CachedResponse:
    return dataclasses.replace(response, source=source)


class Fetcher:
    """HTTP client with live, record and replay modes.

    Replay looks in the cache first, then at the caller's explicit fixture
    path, then at the generic fixture store ``<fixture_root>/web``. It never
    calls the transport.
    """

    def __init__(
        self,
        cache_dir: str | Path | None = None,
        fixture_root: str | Path | None = None,
        transport: Transport | None = None,
        *,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
        user_agent: str = USER_AGENT,
    ):
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.fixture_root = Path(fixture_root) if fixture_root else None
        self._transport = transport or requests_transport
        self._clock = clock
        self._sleep = sleep
        self.user_agent = user_agent
        self._guard = threading.Lock()
        self._host_locks: dict[str, threading.Lock] = {}
        self._last_request: dict[str, float] = {}
        self._captured_at = self._load_captured_at()

    def _load_captured_at(self) -> dt.datetime:
        if self.fixture_root is not None:
            index = self.fixture_root / "fixtures.json"
            if index.is_file():
                data = json.loads(index.read_text("utf-8"))
                if "captured_at" in data:
                    return parse_rfc3339(data["captured_at"])
        return EPOCH

    def fetch(
        self,
        url: str,
        policy: FetchPolicy | None = None,
        *,
        method: str = "GET",
        data: bytes | None = None,
        headers: dict | None = None,
        fixture: str | Path | None = None,
    ) -> CachedResponse:
        policy = policy or FetchPolicy()
        key = cache_key(url, method, data)
        if policy.mode == Mode.REPLAY:
            return self._replay(url, key, fixture)
        response = self._live(url, method, data, headers or {}, policy)
        if policy.mode == Mode.RECORD:
            if self.cache_dir is None:
                raise ValueError("record mode needs a cache directory")
            store_entry(self.cache_dir, key, response)
        return response

    def get_bytes(self, url: str, policy: FetchPolicy | None = None, **kwargs) -> bytes:
        return self.fetch(url, policy, **kwargs).raise_for_status().body

    # replay

    def _replay(self, url: str, key: str, fixture) -> CachedResponse:
        if self.cache_dir is not None:
            hit = self._read_store(self.cache_dir, key, url, "cache")
            if hit is not None:
                return hit
        if self.fixture_root is not None:
            if fixture is not None:
                path = self.fixture_root / fixture
                hit = self._read_entry(path, path.with_name(path.name + ".meta.json"), url, required_meta=False)
                if hit is not None:
                    return hit
            hit = self._read_store(self.fixture_root / "web", key, url, "fixture")
            if hit is not None:
                return hit
        raise CacheMiss(url, "no recorded response")

    def _read_store(self, root: Path, key: str, url: str, source: str) -> CachedResponse | None:
        shard = root / key[:2]
        hit = self._read_entry(shard / f"{key}.body", shard / f"{key}.meta.json", url, required_meta=True)
        return None if hit is None else _with_source(hit, source)

    def _read_entry(self, body_path: Path, meta_path: Path, url: str, *, required_meta: bool):
        """Load one stored response; a cache-layout entry counts only once its meta exists."""
        meta = json.loads(meta_path.read_text("utf-8")) if meta_path.is_file() else None
        if meta is None and (required_meta or not body_path.is_file()):
            return None
        meta = meta or {}
        if "error" in meta:
            if meta["error"] == "timeout":
                raise FetchTimeout(url, "recorded timeout")
            raise FetchError(url, f"recorded failure: {meta['error']}")
        body = body_path.read_bytes() if body_path.is_file() else b""
        if "sha256" in meta and hashlib.sha256(body).hexdigest() != meta["sha256"]:
            log.warning("digest mismatch for %s, ignoring entry", body_path)
            return None
        fetched_at = parse_rfc3339(meta["fetched_at"]) if "fetched_at" in meta else self._captured_at
        return CachedResponse(
            url=url,
            status=int(meta.get("status", 200)),
            headers=tuple((k, v) for k, v in meta.get("headers", [])),
            body=body,
            fetched_at=fetched_at,
            source="fixture",
        )

    # live

    def _host_lock(self, host: str) -> threading.Lock:
        with self._guard:
            return self._host_locks.setdefault(host, threading.Lock())

    def _live(self, url, method, data, headers, policy: FetchPolicy) -> CachedResponse:
        host = (urlsplit(url).hostname or "").lower()
        headers = {"User-Agent": self.user_agent, **headers}
        with self._host_lock(host):
            last = self._last_request.get(host)
            if last is not None and policy.min_delay > 0:
                wait = last + policy.min_delay - self._clock()
                if wait > 0:
                    self._sleep(wait)
            self._last_request[host] = self._clock()
            status, resp_headers, body = self._transport(method, url, data, headers, policy.timeout)
        kept = tuple(
            (k, v) for k, v in resp_headers if k.lower() not in HOP_BY_HOP | _BODY_FRAMING
        )
        memento_dt = next((v for k, v in kept if k.lower() == "memento-datetime"), None)
        if memento_dt:
            log.debug("%s Memento-Datetime: %s", url, memento_dt)
        return CachedResponse(
            url=url,
            status=int(status),
            headers=kept,
            body=bytes(body),
            fetched_at=dt.datetime.now(dt.timezone.utc).replace(microsecond=0),
            source="live",
        )
