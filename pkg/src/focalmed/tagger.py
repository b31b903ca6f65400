"""Literature snippets and the rule-based concept/relation tagger.

A snippet's relation tags come from one rule: an intent phrase found in a
section-path element (the deepest element or any breadcrumb above it) is
paired with every concept recognized in the document title or breadcrumbs.
Sentence-level concept mentions are tagged but never generate relations.

The tagger is pluggable: anything callable as Snippet -> TaggedSnippet can
replace the rule-based one in tag_corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from statistics import median as _median
from typing import Callable, Iterable

from .errors import DuplicateSnippetId, MalformedRecord, NoJudgedDocs, UnknownDocId
from .kg import ConceptId, KnowledgeGraph, RelationType
from .lexicon import SCAN_SPAN_CAP, Lexicon, Mention, Token, match_full_phrase, normalize, recognize
from .parser import IntentPhraseTable, scan_intent_phrases


class Field(Enum):
    DOC_TITLE = "DOC_TITLE"
    SECTION_TITLE = "SECTION_TITLE"
    BREADCRUMB = "BREADCRUMB"
    SENTENCE = "SENTENCE"


FIELD_ORDER = {f: i for i, f in enumerate(Field)}


@dataclass(frozen=True)
class Snippet:
    snippet_id: str
    doc_id: str
    doc_title: str
    section_path: tuple[str, ...] = ()
    sentences: tuple[str, ...] = ()


@dataclass(frozen=True)
class ConceptTag:
    concept_id: ConceptId
    field: Field
    position: int  # section_path or sentence index; 0 for DOC_TITLE


@dataclass(frozen=True)
class RelationTag:
    concept_id: ConceptId
    relation_type: RelationType

    def __post_init__(self):
        if self.relation_type.is_hierarchical:
            raise ValueError("relation tags use semantic relation types only")


@dataclass
class TaggedSnippet:
    snippet: Snippet
    concept_tags: list[ConceptTag] = field(default_factory=list)
    relation_tags: list[RelationTag] = field(default_factory=list)

    def validate(self, graph: KnowledgeGraph) -> None:
        assert len(set(self.concept_tags)) == len(self.concept_tags)
        assert len(set(self.relation_tags)) == len(self.relation_tags)
        anchor_fields = (Field.DOC_TITLE, Field.BREADCRUMB)
        anchors = {t.concept_id for t in self.concept_tags if t.field in anchor_fields}
        for tag in self.concept_tags:
            graph.concept(tag.concept_id)
        for rel in self.relation_tags:
            graph.concept(rel.concept_id)
            assert rel.concept_id in anchors


def _field_mentions(tokens: list[Token], lexicon: Lexicon) -> list[Mention]:
    # Entries longer than the scan cap only match when they cover the whole
    # field text.
    if len(tokens) > SCAN_SPAN_CAP:
        full = match_full_phrase(tokens, lexicon)
        if full:
            return full
    return recognize(tokens, lexicon)


def tag_snippet(
    snippet: Snippet,
    graph: KnowledgeGraph,
    lexicon: Lexicon,
    intents: IntentPhraseTable,
) -> TaggedSnippet:
    """Tag one snippet with concepts per field and rule-derived relations."""
    concept_tags: list[ConceptTag] = []
    seen: set[ConceptTag] = set()

    def add_tags(text: str, fld: Field, position: int) -> None:
        for m in _field_mentions(normalize(text), lexicon):
            tag = ConceptTag(m.concept_id, fld, position)
            if tag not in seen:
                seen.add(tag)
                concept_tags.append(tag)

    add_tags(snippet.doc_title, Field.DOC_TITLE, 0)
    last = len(snippet.section_path) - 1
    for i, element in enumerate(snippet.section_path):
        add_tags(element, Field.SECTION_TITLE if i == last else Field.BREADCRUMB, i)
    for i, sentence in enumerate(snippet.sentences):
        add_tags(sentence, Field.SENTENCE, i)

    section_relations: list[RelationType] = []
    for element in snippet.section_path:
        for _start, _end, relation in scan_intent_phrases(normalize(element), intents):
            if relation not in section_relations:
                section_relations.append(relation)

    anchor_fields = (Field.DOC_TITLE, Field.BREADCRUMB)
    anchor_concepts = sorted({t.concept_id for t in concept_tags if t.field in anchor_fields})
    relation_tags = [
        RelationTag(cid, relation)
        for cid in anchor_concepts
        for relation in sorted(section_relations, key=lambda r: r.value)
    ]

    return TaggedSnippet(snippet=snippet, concept_tags=concept_tags, relation_tags=relation_tags)


def tag_corpus(
    snippets: Iterable[Snippet],
    graph: KnowledgeGraph,
    lexicon: Lexicon,
    intents: IntentPhraseTable,
    tagger: Callable[[Snippet], TaggedSnippet] | None = None,
) -> list[TaggedSnippet]:
    """Order-preserving map of the tagger over a corpus with unique ids."""
    if tagger is None:
        tagger = lambda s: tag_snippet(s, graph, lexicon, intents)  # noqa: E731
    tagged: list[TaggedSnippet] = []
    seen_ids: set[str] = set()
    for snippet in snippets:
        if snippet.snippet_id in seen_ids:
            raise DuplicateSnippetId(snippet.snippet_id)
        seen_ids.add(snippet.snippet_id)
        tagged.append(tagger(snippet))
    return tagged


def field_tag_counts(tagged: Iterable[TaggedSnippet]) -> dict[Field, int]:
    counts = {f: 0 for f in Field}
    for ts in tagged:
        for tag in ts.concept_tags:
            counts[tag.field] += 1
    return counts


ManualTag = tuple[str, ConceptId, RelationType]


def coverage(
    auto: list[TaggedSnippet], manual: list[ManualTag]
) -> tuple[dict[str, float], float]:
    """Per-document recall of manual relation tags, plus the median.

    Relation tags are compared as (concept_id, relation_type) pairs
    aggregated over each document's snippets. Documents without manual tags
    are excluded; an even document count medians the middle two.
    """
    known_docs = {ts.snippet.doc_id for ts in auto}
    manual_by_doc: dict[str, set[tuple[ConceptId, RelationType]]] = {}
    for doc_id, concept_id, relation in manual:
        if doc_id not in known_docs:
            raise UnknownDocId(doc_id)
        manual_by_doc.setdefault(doc_id, set()).add((concept_id, relation))

    if not manual_by_doc:
        raise NoJudgedDocs("no document carries a manual relation tag")

    auto_by_doc: dict[str, set[tuple[ConceptId, RelationType]]] = {}
    for ts in auto:
        pairs = auto_by_doc.setdefault(ts.snippet.doc_id, set())
        pairs.update((t.concept_id, t.relation_type) for t in ts.relation_tags)

    per_doc = {
        doc_id: len(auto_by_doc.get(doc_id, set()) & manual_pairs) / len(manual_pairs)
        for doc_id, manual_pairs in manual_by_doc.items()
    }
    return per_doc, _median(sorted(per_doc.values()))


def tagging_precision(
    auto: list[TaggedSnippet], manual: list[ManualTag]
) -> dict[str, float]:
    """Informational: per-doc fraction of auto relation tags found in manual."""
    manual_by_doc: dict[str, set[tuple[ConceptId, RelationType]]] = {}
    for doc_id, concept_id, relation in manual:
        manual_by_doc.setdefault(doc_id, set()).add((concept_id, relation))
    auto_by_doc: dict[str, set[tuple[ConceptId, RelationType]]] = {}
    for ts in auto:
        pairs = auto_by_doc.setdefault(ts.snippet.doc_id, set())
        pairs.update((t.concept_id, t.relation_type) for t in ts.relation_tags)
    return {
        doc_id: len(pairs & manual_by_doc.get(doc_id, set())) / len(pairs)
        for doc_id, pairs in auto_by_doc.items()
        if pairs
    }


# ---------------------------------------------------------------------------
# File formats (UTF-8, one JSON object per line)


def load_corpus(path: str | Path) -> list[Snippet]:
    snippets: list[Snippet] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from None
            try:
                snippets.append(
                    Snippet(
                        snippet_id=obj["snippet_id"],
                        doc_id=obj["doc_id"],
                        doc_title=obj["doc_title"],
                        section_path=tuple(obj.get("section_path", [])),
                        sentences=tuple(obj.get("sentences", [])),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise MalformedRecord(line_no, f"bad snippet record: {exc}") from None
            if not snippets[-1].doc_title:
                raise MalformedRecord(line_no, "doc_title must be non-empty")
    return snippets


def load_manual_tags(path: str | Path) -> list[ManualTag]:
    tags: list[ManualTag] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                tags.append((obj["doc_id"], obj["concept_id"], RelationType(obj["relation_type"])))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise MalformedRecord(line_no, f"bad manual tag record: {exc}") from None
    return tags


def snippet_to_dict(snippet: Snippet) -> dict:
    return {
        "snippet_id": snippet.snippet_id,
        "doc_id": snippet.doc_id,
        "doc_title": snippet.doc_title,
        "section_path": list(snippet.section_path),
        "sentences": list(snippet.sentences),
    }


def snippet_from_dict(obj: dict) -> Snippet:
    return Snippet(
        snippet_id=obj["snippet_id"],
        doc_id=obj["doc_id"],
        doc_title=obj["doc_title"],
        section_path=tuple(obj.get("section_path", [])),
        sentences=tuple(obj.get("sentences", [])),
    )


def save_tagged_corpus(tagged: Iterable[TaggedSnippet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ts in tagged:
            record = {
                "snippet": snippet_to_dict(ts.snippet),
                "concept_tags": [
                    {"concept_id": t.concept_id, "field": t.field.value, "position": t.position}
                    for t in ts.concept_tags
                ],
                "relation_tags": [
                    {"concept_id": t.concept_id, "relation_type": t.relation_type.value}
                    for t in ts.relation_tags
                ],
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_tagged_corpus(path: str | Path) -> list[TaggedSnippet]:
    tagged: list[TaggedSnippet] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                tagged.append(
                    TaggedSnippet(
                        snippet=snippet_from_dict(obj["snippet"]),
                        concept_tags=[
                            ConceptTag(t["concept_id"], Field(t["field"]), t["position"])
                            for t in obj["concept_tags"]
                        ],
                        relation_tags=[
                            RelationTag(t["concept_id"], RelationType(t["relation_type"]))
                            for t in obj["relation_tags"]
                        ],
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise MalformedRecord(line_no, f"bad tagged snippet record: {exc}") from None
    return tagged
