from __future__ import annotations

import re
from pathlib import Path

import pytest

from imagespread.analytics import NewsDomainList, classify_news
from imagespread.psl import registrable_domain
from imagespread.urls import canonicalize_url

VECTORS = Path(__file__).parent / "data" / "test_psl.txt"
_LINE = re.compile(r"^checkPublicSuffix\((null|'[^']*'), (null|'[^']*')\);")


def _load():
    out = []
    for line in VECTORS.read_text("utf-8").splitlines():
        m = _LINE.match(line.strip())
        if m:
            a, b = (None if g == "null" else g[1:-1] for g in m.groups())
            out.append((a, b))
    return out


CASES = _load()


def test_vector_file_loaded():
    assert len(CASES) > 70


@pytest.mark.parametrize("host, expected", CASES)
def test_upstream_vectors(host, expected):
    assert registrable_domain(host) == expected


@pytest.mark.parametrize(
    "url, news",
    [
        ("https://www.nytimes.com/2020/03/11/a.html", True),
        ("https://graphics.chicagotribune.com/x", True),
        ("https://www.bbc.co.uk/news/health-1", True),
        ("https://nytimes.com.mirror-news.example/a", False),
        ("https://co.uk/x", False),
        ("https://blog.example.org/x", False),
        ("http://[::1]/x", False),
    ],
)
def test_news_classification(url, news):
    lst = NewsDomainList.from_lines(["nytimes.com", "chicagotribune.com", "BBC.CO.UK", "# comment", ""])
    assert classify_news(canonicalize_url(url), lst) is news


def test_news_list_accepts_url_and_subdomain_spellings():
    lst = NewsDomainList.from_lines(["https://www.theatlantic.com/", "edition.cnn.com  # intl edition"])
    assert lst.domains == frozenset({"theatlantic.com", "cnn.com"})
