"""Text normalization, dictionary concept recognition, and spell correction.

The lexicon is rebuilt from the knowledge graph on every load (it is never
serialized) and is immutable afterwards; all functions here are pure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .kg import ConceptId, KnowledgeGraph

# A token is a run of letters/digits, possibly joined by internal hyphens
# ("covid-19"); underscores and every other character separate tokens.
_TOKEN_RE = re.compile(r"[^\W_]+(?:-[^\W_]+)*", re.UNICODE)

# Spans longer than this are not tried during the left-to-right scan; longer
# lexicon entries still match a whole field (see tagger full-field matching).
SCAN_SPAN_CAP = 6

CORRECTED_WEIGHT = 0.8


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    start: int
    end: int


@dataclass(frozen=True)
class Mention:
    concept_id: ConceptId
    start: int  # token index, inclusive
    end: int  # token index, exclusive
    matched_text: str
    corrected: bool = False


@dataclass
class Lexicon:
    """Normalized phrase -> [(concept_id, is_preferred)], multi-map."""

    entries: dict[str, list[tuple[ConceptId, bool]]]
    max_phrase_len: int

    def __len__(self) -> int:
        return len(self.entries)

    def concepts_for(self, phrase: str) -> list[tuple[ConceptId, bool]]:
        return self.entries.get(phrase, [])


def normalize(text: str) -> list[Token]:
    """Lowercase and split ``text`` into tokens, preserving input order."""
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        tokens.append(Token(surface=m.group(), normalized=m.group().lower(), start=m.start(), end=m.end()))
    return tokens


def normalize_phrase(text: str) -> str:
    """The canonical lexicon key for a label: joined normalized tokens."""
    return " ".join(t.normalized for t in normalize(text))


def build_lexicon(graph: KnowledgeGraph) -> Lexicon:
    """One entry per distinct normalized preferred label or synonym.

    A phrase shared by several concepts keeps all of them, ordered by
    concept id.
    """
    entries: dict[str, list[tuple[ConceptId, bool]]] = {}
    for concept in graph.concepts.values():
        labels = [(concept.preferred_label, True)]
        labels.extend((syn, False) for syn in concept.synonyms)
        for label, is_preferred in labels:
            phrase = normalize_phrase(label)
            if not phrase:
                continue
            bucket = entries.setdefault(phrase, [])
            if all(cid != concept.id for cid, _ in bucket):
                bucket.append((concept.id, is_preferred))
    for bucket in entries.values():
        bucket.sort(key=lambda pair: pair[0])
    max_len = max((phrase.count(" ") + 1 for phrase in entries), default=0)
    return Lexicon(entries=entries, max_phrase_len=max_len)


def recognize(tokens: list[Token], lexicon: Lexicon) -> list[Mention]:
    """Greedy left-to-right longest-match scan over normalized tokens.

    At each position, spans of length min(max_phrase_len, SCAN_SPAN_CAP)
    down to 1 are tried; on a match, one mention per candidate concept is
    emitted and the scan advances past the span, so mentions never overlap.
    """
    mentions: list[Mention] = []
    cap = min(lexicon.max_phrase_len, SCAN_SPAN_CAP)
    i = 0
    n = len(tokens)
    while i < n:
        matched = False
        for span in range(min(cap, n - i), 0, -1):
            phrase = " ".join(t.normalized for t in tokens[i : i + span])
            candidates = lexicon.concepts_for(phrase)
            if candidates:
                for cid, _ in candidates:
                    mentions.append(Mention(concept_id=cid, start=i, end=i + span, matched_text=phrase))
                i += span
                matched = True
                break
        if not matched:
            i += 1
    return mentions


def match_full_phrase(tokens: list[Token], lexicon: Lexicon) -> list[Mention]:
    """Exact whole-sequence match, used for entries beyond the scan cap."""
    if not tokens:
        return []
    phrase = " ".join(t.normalized for t in tokens)
    return [
        Mention(concept_id=cid, start=0, end=len(tokens), matched_text=phrase)
        for cid, _ in lexicon.concepts_for(phrase)
    ]


def edit_budget(length: int) -> int:
    """Allowed correction distance for a token of the given length."""
    if length < 5:
        return 0
    if length <= 8:
        return 1
    return 2


def damerau_levenshtein(a: str, b: str) -> int:
    """Edit distance counting adjacent transposition as a single edit."""
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev2: list[int] = []
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                cur[j] = min(cur[j], prev2[j - 2] + 1)
        prev2, prev = prev, cur
    return prev[lb]


def correct(token: Token, lexicon: Lexicon) -> tuple[str, int] | None:
    """Closest single-token lexicon entry within the length-derived budget.

    Ties on distance break lexicographically; returns None when nothing
    fits the budget. Callers only pass tokens that failed exact matching.
    """
    budget = edit_budget(len(token.normalized))
    if budget == 0:
        return None
    best: tuple[int, str] | None = None
    for phrase in lexicon.entries:
        if " " in phrase:
            continue
        if abs(len(phrase) - len(token.normalized)) > budget:
            continue
        dist = damerau_levenshtein(token.normalized, phrase)
        if dist > budget:
            continue
        if best is None or (dist, phrase) < best:
            best = (dist, phrase)
    if best is None:
        return None
    return best[1], best[0]
