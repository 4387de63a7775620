from __future__ import annotations

import datetime as dt
import io

import pytest
from PIL import Image

from conftest import chart_png
from imagespread.errors import AdapterParseError, EngineUnavailable
from imagespread.fetch import Fetcher
from imagespread.model import ImageVariant
from imagespread.records import HITS_COLUMNS, hit_rows, read_hits, write_csv
from imagespread.search import (
    dedupe_hits,
    parse_engine_results,
    run_reverse_search,
    thumb_fixture,
)
from imagespread.urls import canonicalize_url, is_canonical


def no_network(*a):
    raise AssertionError("network used in replay")


def bing_page(links, next_href=None, similar=4):
    items = "".join(
        f'<li><a class="pi-link" href="{href}">page</a>'
        + (f'<img class="pi-thumb" src="{thumb}">' if thumb else "")
        + "</li>"
        for href, thumb in links
    )
    tiles = "".join(
        f'<li><a class="sim-link" href="https://similar{i}.example/"><img src="https://t.example/s{i}.jpg"></a></li>'
        for i in range(similar)
    )
    nxt = f'<a class="pi-next" href="{next_href}">next</a>' if next_href else ""
    return (
        "<html><body><div id='insights-root'>"
        f"<ul class='pages-including'>{items}</ul>"
        f"<div class='similar-images'><ul>{tiles}</ul></div>{nxt}"
        "</div></body></html>"
    ).encode()


def shrink(data: bytes, factor=0.5) -> bytes:
    img = Image.open(io.BytesIO(data)).convert("RGB")
    img = img.resize((int(img.width * factor), int(img.height * factor)), Image.LANCZOS)
    buf = io.BytesIO()
    img.save(buf, format="JPEG", quality=90)
    return buf.getvalue()


@pytest.fixture
def study(tmp_path):
    image = chart_png(3)
    (tmp_path / "v.png").write_bytes(image)
    variant = ImageVariant("fig", "Figure", tmp_path / "v.png")
    root = tmp_path / "fixtures"

    def put(rel, data):
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)

    return variant, root, put, image


def test_bing_ignores_similar_images():
    body = bing_page([(f"https://site{i}.example/a", None) for i in range(3)], similar=4)
    entries = parse_engine_results("bing", body)
    assert [e.page_url for e in entries] == [f"https://site{i}.example/a" for i in range(3)]


def test_empty_result_page():
    assert parse_engine_results("bing", bing_page([], similar=0)) == []


@pytest.mark.parametrize("body", [b"<html><body>nothing here</body></html>", b"\xff\xfe\x00garbage"])
def test_unrecognized_page_raises(body):
    with pytest.raises(AdapterParseError):
        parse_engine_results("bing", body)


def test_google_and_baidu_layouts():
    google = (
        b"<div id='search'><div id='pages-with-image'>"
        b"<div class='g'><a href='/url?x'>x</a></div>"
        b"<div class='g'><a href='https://g.example/p'>p</a><img class='thumb' src='https://t.example/1.jpg'></div>"
        b"</div><div id='visually-similar'><div class='g'><a href='https://no.example/'>no</a></div></div></div>"
    )
    entries = parse_engine_results("google", google)
    assert [e.page_url for e in entries] == ["https://www.google.com/url?x", "https://g.example/p"]
    assert entries[1].thumbnail_ref == "https://t.example/1.jpg"
    baidu = (
        "<div class='graph-container'><ul class='graph-same-list'>"
        "<li class='graph-same-list-item'><a class='graph-same-list-link' href='https://b.example/新闻'>b</a>"
        "<img src='//t.example/b.jpg'></li></ul></div>"
    ).encode()
    (entry,) = parse_engine_results("baidu", baidu)
    assert entry.thumbnail_ref == "https://t.example/b.jpg"
    assert str(canonicalize_url(entry.page_url)) == "https://b.example/%E6%96%B0%E9%97%BB"


def test_pagination_and_page_cap(study):
    variant, root, put, _ = study
    put("engines/bing/fig/page-1.html", bing_page([(f"https://p{i}.example/", None) for i in range(3)], "/next?p=2"))
    put("engines/bing/fig/page-2.html", bing_page([(f"https://q{i}.example/", None) for i in range(2)]))
    fetcher = Fetcher(fixture_root=root, transport=no_network)
    assert len(run_reverse_search("bing", variant, fetcher, max_pages=10)) == 5
    assert len(run_reverse_search("bing", variant, fetcher, max_pages=1)) == 3


def test_thumbnail_matching(study):
    variant, root, put, image = study
    links = [
        ("https://same.example/", "https://t.example/same.jpg"),
        ("https://other.example/", "https://t.example/other.jpg"),
        ("https://nothumb.example/", "https://t.example/missing.jpg"),
        ("https://bare.example/", None),
    ]
    put("engines/bing/fig/page-1.html", bing_page(links))
    put(thumb_fixture("bing", "fig", "https://t.example/same.jpg"), shrink(image))
    put(thumb_fixture("bing", "fig", "https://t.example/other.jpg"), shrink(chart_png(99)))
    hits = run_reverse_search("bing", variant, Fetcher(fixture_root=root, transport=no_network))
    assert [h.matched for h in hits] == [True, False, None, None]
    assert [h.accepted for h in hits] == [True, False, True, True]
    assert hits[2].thumbnail is None
    assert hits[0].match.distance <= 10 < hits[1].match.distance


def test_missing_first_page_is_unavailable(study):
    variant, root, _, _ = study
    with pytest.raises(EngineUnavailable):
        run_reverse_search("google", variant, Fetcher(fixture_root=root, transport=no_network))


def test_dedupe_tracking_variants(study):
    variant, root, put, _ = study
    put(
        "engines/bing/fig/page-1.html",
        bing_page(
            [
                ("https://news.example/story?utm_source=tw", None),
                ("https://NEWS.example:443/story#top", None),
                ("https://news.example//story?fbclid=1", None),
            ]
        ),
    )
    hits = run_reverse_search("bing", variant, Fetcher(fixture_root=root, transport=no_network))
    unique = dedupe_hits(hits)
    assert len(unique) == 1
    assert unique[0].page_url == "https://news.example/story?utm_source=tw"
    assert str(unique[0].canonical_url) == "https://news.example/story"


def test_two_engines_are_two_hits(study):
    variant, root, put, _ = study
    put("engines/bing/fig/page-1.html", bing_page([("https://x.example/a", None)]))
    put(
        "engines/google/fig/page-1.html",
        b"<div id='search'><div id='pages-with-image'><div class='g'><a href='https://x.example/a'>a</a></div></div></div>",
    )
    fetcher = Fetcher(fixture_root=root, transport=no_network)
    hits = run_reverse_search("bing", variant, fetcher) + run_reverse_search("google", variant, fetcher)
    assert len(dedupe_hits(hits)) == 2
    assert all(is_canonical(str(h.canonical_url)) for h in hits)


def test_hits_csv_round_trip_and_determinism(study, tmp_path):
    variant, root, put, image = study
    put("engines/bing/fig/page-1.html", bing_page([("https://a.example/p?utm_medium=x", "https://t.example/a.jpg")]))
    put(thumb_fixture("bing", "fig", "https://t.example/a.jpg"), shrink(image))
    outputs = []
    for i in range(2):
        hits = dedupe_hits(run_reverse_search("bing", variant, Fetcher(fixture_root=root, transport=no_network)))
        path = tmp_path / f"hits{i}.csv"
        write_csv(path, HITS_COLUMNS, hit_rows(hits))
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    (back,) = read_hits(tmp_path / "hits0.csv")
    assert back.page_url == "https://a.example/p?utm_medium=x"
    assert back.matched is True
    assert back.retrieved_at.tzinfo is not None
    assert isinstance(back.retrieved_at, dt.datetime)
