from __future__ import annotations

import datetime as dt
import itertools
import json
import random
import time
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imagespread.errors import AllArchivesFailed, ArchiveError, ArchiveUnreachable, TimeMapSyntaxError
from imagespread.fetch import Fetcher, rfc3339
from imagespread.memento import (
    MementoRecord,
    TimeMap,
    aggregate_timemaps,
    fetch_timemap,
    filter_mementos,
    format_http_date,
    merge_mementos,
    parse_http_date,
    parse_link_format,
    parse_timemap,
    serialize_timemap,
)
from imagespread.model import Archive
from imagespread.urls import canonicalize_url
from oracles.aggregate import brute_force_merge

CORPUS = Path(__file__).parent / "data" / "timemaps"
EXPECTED = json.loads((CORPUS / "expected.json").read_text("utf-8"))
URI_R = canonicalize_url("https://ex.com/")
UTC = dt.timezone.utc
BOUND = dt.date(2020, 1, 30)


def test_corpus_size():
    assert len(list(CORPUS.glob("*.link"))) >= 20
    assert set(EXPECTED) == {p.name for p in CORPUS.glob("*.link")}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_corpus_counts(name):
    exp = EXPECTED[name]
    tm = parse_timemap((CORPUS / name).read_text("utf-8"), URI_R, "arc")
    assert len(tm) == exp["mementos"]
    assert tm.skipped == exp["skipped"]
    assert tm.malformed == exp["malformed"]
    if tm.mementos:
        assert rfc3339(tm.mementos[0].memento_datetime) == exp["first"]
        assert rfc3339(tm.mementos[-1].memento_datetime) == exp["last"]


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_serialize_parse_fixed_point(name):
    tm = parse_timemap((CORPUS / name).read_text("utf-8"), URI_R, "arc")
    again = parse_timemap(serialize_timemap(tm), URI_R, "arc")
    assert again.mementos == tm.mementos
    assert again.skipped == again.malformed == 0


def test_single_memento_example():
    body = (
        '<https://arc.example/w/20200315000000/https://ex.com/>; rel="memento"; '
        'datetime="Sun, 15 Mar 2020 00:00:00 GMT"'
    )
    tm = parse_timemap(body, "https://ex.com/", "arc")
    assert [(r.uri_m, r.memento_datetime) for r in tm.mementos] == [
        ("https://arc.example/w/20200315000000/https://ex.com/", dt.datetime(2020, 3, 15, tzinfo=UTC))
    ]


def test_empty_and_original_only():
    assert len(parse_timemap("", URI_R, "a")) == 0
    assert len(parse_timemap('<https://ex.com/>; rel="original"', URI_R, "a")) == 0


def test_unparsable_body_raises():
    with pytest.raises(TimeMapSyntaxError):
        parse_timemap("<html><body>Service unavailable</body></html>", URI_R, "a")


def test_link_params():
    links, bad = parse_link_format('<a>; rel="x y"; title="q\\"d, e;f", <b>;anchor; type=text/html')
    assert bad == 0
    assert links[0].rels == ("x", "y") and links[0].get("title") == 'q"d, e;f'
    assert links[1].params == (("anchor", ""), ("type", "text/html"))


def test_http_dates():
    t = dt.datetime(2020, 3, 15, 1, 2, 3, tzinfo=UTC)
    assert format_http_date(t) == "Sun, 15 Mar 2020 01:02:03 GMT"
    assert parse_http_date(format_http_date(t)) == t
    for bad in ("", "2020-03-15", "Sun, 15 Mar 2020 01:02:03 UTC", "Sun, 31 Apr 2020 00:00:00 GMT"):
        with pytest.raises(ValueError):
            parse_http_date(bad)


# fetching one archive


def _archive_dir(root: Path, archive_id: str, body: str | None = None, meta: dict | None = None, uri_r=URI_R):
    path = root / "archives" / archive_id / f"{uri_r.digest}.link"
    path.parent.mkdir(parents=True, exist_ok=True)
    if body is not None:
        path.write_text(body, encoding="utf-8")
    if meta is not None:
        path.with_name(path.name + ".meta.json").write_text(json.dumps(meta), encoding="utf-8")


def _links(uri_ms_and_times):
    lines = [f"<{URI_R}>; rel=\"original\""]
    for uri_m, t in uri_ms_and_times:
        lines.append(f'<{uri_m}>; rel="memento"; datetime="{t.strftime("%a, %d %b %Y %H:%M:%S GMT")}"')
    return ",\n".join(lines) + "\n"


def _arc(i):
    return Archive(i, f"https://{i}.example/timemap/{{uri_r}}")


def test_fetch_three_mementos(tmp_path):
    times = [dt.datetime(2020, 3, d, tzinfo=UTC) for d in (1, 2, 3)]
    _archive_dir(tmp_path, "a", _links([(f"https://a.example/{i}", t) for i, t in enumerate(times)]))
    tm = fetch_timemap(_arc("a"), URI_R, Fetcher(fixture_root=tmp_path))
    assert len(tm) == 3


def test_fetch_404_is_empty(tmp_path):
    _archive_dir(tmp_path, "a", meta={"status": 404})
    assert len(fetch_timemap(_arc("a"), URI_R, Fetcher(fixture_root=tmp_path))) == 0


def test_fetch_timeout_and_server_error(tmp_path):
    _archive_dir(tmp_path, "t", "", meta={"error": "timeout"})
    _archive_dir(tmp_path, "s", "oops", meta={"status": 503})
    f = Fetcher(fixture_root=tmp_path)
    with pytest.raises(ArchiveUnreachable):
        fetch_timemap(_arc("t"), URI_R, f)
    with pytest.raises(ArchiveError):
        fetch_timemap(_arc("s"), URI_R, f)
    with pytest.raises(ArchiveUnreachable):  # nothing recorded at all
        fetch_timemap(_arc("missing"), URI_R, f)


# aggregation


def test_union_on_uri_m(tmp_path):
    t = [dt.datetime(2020, 3, d, tzinfo=UTC) for d in range(1, 5)]
    _archive_dir(tmp_path, "a", _links([("https://m/1", t[0]), ("https://m/2", t[1])]))
    _archive_dir(tmp_path, "b", _links([("https://m/2", t[1]), ("https://m/3", t[2])]))
    res = aggregate_timemaps(URI_R, [_arc("a"), _arc("b")], Fetcher(fixture_root=tmp_path))
    assert [r.uri_m for r in res.mementos] == ["https://m/1", "https://m/2", "https://m/3"]
    assert res.errors == [] and res.per_archive == {"a": 2, "b": 2}


def test_partial_failure(tmp_path):
    t = dt.datetime(2020, 3, 1, tzinfo=UTC)
    _archive_dir(tmp_path, "a", _links([("https://m/1", t), ("https://m/2", t)]))
    _archive_dir(tmp_path, "b", meta={"error": "timeout"})
    res = aggregate_timemaps(URI_R, [_arc("a"), _arc("b")], Fetcher(fixture_root=tmp_path))
    assert len(res.mementos) == 2
    assert len(res.errors) == 1 and res.errors[0][0] == "b"
    assert isinstance(res.errors[0][1], ArchiveUnreachable)


def test_all_empty(tmp_path):
    _archive_dir(tmp_path, "a", meta={"status": 404})
    _archive_dir(tmp_path, "b", _links([]))
    res = aggregate_timemaps(URI_R, [_arc("a"), _arc("b")], Fetcher(fixture_root=tmp_path))
    assert res.mementos == [] and res.errors == []


def test_all_failed(tmp_path):
    with pytest.raises(AllArchivesFailed) as err:
        aggregate_timemaps(URI_R, [_arc("a"), _arc("b")], Fetcher(fixture_root=tmp_path))
    assert [a for a, _ in err.value.errors] == ["a", "b"]


@pytest.mark.parametrize("seed", range(60))
def test_aggregation_oracle(tmp_path, seed):
    rng = random.Random(seed)
    n_archives = rng.randint(1, 5)
    ids = rng.sample(["ia", "ukwa", "arquivo", "loc", "perma", "archive-it"], n_archives)
    pool = [f"https://m.example/{k}" for k in range(rng.randint(1, 30))]
    base = dt.datetime(2020, 1, 1, tzinfo=UTC)
    per_archive = {}
    total = rng.randint(0, 50)
    for i, a in enumerate(ids):
        share = total // n_archives + (1 if i < total % n_archives else 0)
        rows = []
        for _ in range(share):
            uri_m = rng.choice(pool)
            # mirrors list the same URI-M with a nearby or identical datetime
            t = base + dt.timedelta(days=rng.randint(0, 60), seconds=rng.choice([0, 0, 1, 3600]))
            rows.append((uri_m, t))
        per_archive[a] = rows
        _archive_dir(tmp_path, a, _links(rows))
    expected = brute_force_merge(per_archive)
    archives = [_arc(a) for a in ids]
    fetcher = Fetcher(fixture_root=tmp_path)

    started = time.perf_counter()
    got = aggregate_timemaps(URI_R, archives, fetcher)
    assert time.perf_counter() - started < 1.0
    assert [(rfc3339(r.memento_datetime), r.uri_m, r.archive_id) for r in got.mementos] == expected
    assert len({r.uri_m for r in got.mementos}) == len(got.mementos)
    assert {r.uri_m for r in got.mementos} == {u for rows in per_archive.values() for u, _ in rows}

    for perm in itertools.islice(itertools.permutations(archives), 6):
        assert aggregate_timemaps(URI_R, list(perm), fetcher).mementos == got.mementos


# date bound


_times = st.datetimes(
    min_value=dt.datetime(2019, 6, 1), max_value=dt.datetime(2021, 6, 1), timezones=st.just(UTC)
) | st.sampled_from(
    [dt.datetime(2020, 1, 30, tzinfo=UTC), dt.datetime(2020, 1, 29, 23, 59, 59, tzinfo=UTC)]
)


def _records(times):
    return [MementoRecord(URI_R, f"https://m/{i}", "a", t) for i, t in enumerate(times)]


@settings(max_examples=200, deadline=None)
@given(st.lists(_times, max_size=30), st.dates(min_value=dt.date(2019, 6, 1), max_value=dt.date(2021, 6, 1)))
def test_filter_properties(times, bound):
    ms = _records(times)
    out = filter_mementos(ms, bound)
    assert all(m in ms for m in out)
    assert filter_mementos(out, bound) == out
    cutoff = dt.datetime.combine(bound, dt.time(0), tzinfo=UTC)
    assert all(m.memento_datetime >= cutoff for m in out)
    assert len(out) == sum(1 for m in ms if m.memento_datetime >= cutoff)


def test_filter_boundary():
    before = dt.datetime(2020, 1, 29, 23, 59, 59, tzinfo=UTC)
    at = dt.datetime(2020, 1, 30, tzinfo=UTC)
    assert filter_mementos(_records([before]), BOUND) == []
    assert len(filter_mementos(_records([at]), BOUND)) == 1
    assert filter_mementos([], BOUND) == []


def test_merge_prefers_earliest_then_archive_id():
    t1, t2 = dt.datetime(2020, 3, 1, tzinfo=UTC), dt.datetime(2020, 3, 2, tzinfo=UTC)
    a = TimeMap(URI_R, "b", (MementoRecord(URI_R, "u", "b", t1),))
    b = TimeMap(URI_R, "a", (MementoRecord(URI_R, "u", "a", t1), MementoRecord(URI_R, "v", "a", t2)))
    c = TimeMap(URI_R, "c", (MementoRecord(URI_R, "v", "c", t1),))
    merged = merge_mementos([a, b, c])
    assert [(r.uri_m, r.archive_id, r.memento_datetime) for r in merged] == [("u", "a", t1), ("v", "c", t1)]
