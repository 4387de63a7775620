"""Registrable-domain lookup against a shipped Public Suffix List snapshot."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=1)
def _rules() -> tuple[frozenset, frozenset, frozenset]:
    exact, wildcard, exception = set(), set(), set()
    text = resources.files("imagespread").joinpath("data/public_suffix_list.dat").read_text("utf-8")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("//"):
            continue
        rule = line.split()[0].lower()
        if rule.startswith("!"):
            exception.add(rule[1:])
        elif rule.startswith("*."):
            wildcard.add(rule[2:])
        else:
            exact.add(rule)
    return frozenset(exact), frozenset(wildcard), frozenset(exception)


def _to_unicode(label: str) -> str:
    if label.startswith("xn--"):
        try:
            return label.encode("ascii").decode("idna")
        except UnicodeError:
            return label
    return label


def public_suffix_length(labels: list[str]) -> int:
    """Number of trailing labels forming the public suffix (at least 1)."""
    exact, wildcard, exception = _rules()
    names = [_to_unicode(label) for label in labels]
    best = 1  # implicit "*" rule
    for i in range(len(names)):
        candidate = ".".join(names[i:])
        n = len(names) - i
        if candidate in exception:
            return n - 1
        if candidate in exact:
            best = max(best, n)
        parent = ".".join(names[i + 1 :])
        if i + 1 < len(names) and parent in wildcard:
            best = max(best, n)
    return best


def registrable_domain(host: str | None) -> str | None:
    """Public suffix plus one label, or None when the host has no such part."""
    if not host:
        return None
    host = host.lower()
    if host.startswith(".") or host.startswith("["):
        return None
    host = host.rstrip(".")
    labels = host.split(".")
    if any(not label for label in labels) or labels[-1].isdigit():
        return None
    suffix = public_suffix_length(labels)
    if len(labels) <= suffix:
        return None
    return ".".join(labels[-(suffix + 1) :])
