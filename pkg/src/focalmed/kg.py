"""Healthcare knowledge graph: concepts, labels, and typed relations.

The graph is loaded once from a line-delimited JSON file, validated, and
never mutated afterwards; updates are whole-file reloads. That makes every
structure here safe for unlimited concurrent readers.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import (
    DanglingRelation,
    DuplicateConcept,
    HierarchyCycle,
    MalformedRecord,
    UnknownConcept,
)

ConceptId = str


class SemanticType(Enum):
    DISEASE = "DISEASE"
    DRUG = "DRUG"
    FINDING = "FINDING"
    PROCEDURE = "PROCEDURE"
    COHORT = "COHORT"
    OTHER = "OTHER"


class RelationType(Enum):
    IS_A = "IS_A"
    HAS_DIFFERENTIAL_DIAGNOSIS = "HAS_DIFFERENTIAL_DIAGNOSIS"
    HAS_TREATMENT = "HAS_TREATMENT"
    HAS_ADVERSE_REACTION = "HAS_ADVERSE_REACTION"
    HAS_DOSAGE = "HAS_DOSAGE"
    HAS_CAUSE = "HAS_CAUSE"
    HAS_DIAGNOSTIC_TEST = "HAS_DIAGNOSTIC_TEST"

    @property
    def is_hierarchical(self) -> bool:
        return self is RelationType.IS_A


SEMANTIC_RELATIONS = tuple(r for r in RelationType if not r.is_hierarchical)


@dataclass(frozen=True)
class Concept:
    id: ConceptId
    preferred_label: str
    synonyms: tuple[str, ...]
    semantic_type: SemanticType


@dataclass(frozen=True)
class Relation:
    subject: ConceptId
    predicate: RelationType
    object: ConceptId


@dataclass
class KnowledgeGraph:
    """Validated, immutable concept graph.

    ``children`` maps a concept to its direct IS_A specializations (the
    reverse of the stored IS_A edges, which point child -> parent).
    """

    concepts: dict[ConceptId, Concept]
    relations: list[Relation]
    children: dict[ConceptId, list[ConceptId]] = field(default_factory=dict)

    @property
    def concept_count(self) -> int:
        return len(self.concepts)

    @property
    def relation_count(self) -> int:
        return len(self.relations)

    def concept(self, concept_id: ConceptId) -> Concept:
        try:
            return self.concepts[concept_id]
        except KeyError:
            raise UnknownConcept(concept_id) from None

    def outgoing(self, concept_id: ConceptId) -> list[Relation]:
        self.concept(concept_id)
        return [r for r in self.relations if r.subject == concept_id]


def _normalize_phrase(text: str) -> str:
    # Token-level normalization lives in focalmed.lexicon; this light variant
    # is enough to deduplicate label variants at load time.
    return " ".join(text.lower().split())


def _parse_concept(obj: dict, line_no: int) -> Concept:
    cid = obj.get("id")
    label = obj.get("preferred_label")
    if not isinstance(cid, str) or not cid:
        raise MalformedRecord(line_no, "concept id must be non-empty text")
    if not isinstance(label, str) or not label.strip():
        raise MalformedRecord(line_no, f"concept {cid!r} has an empty preferred_label")
    raw_synonyms = obj.get("synonyms", [])
    if not isinstance(raw_synonyms, list) or any(not isinstance(s, str) for s in raw_synonyms):
        raise MalformedRecord(line_no, f"concept {cid!r} synonyms must be a list of text")
    try:
        sem = SemanticType(obj.get("semantic_type"))
    except ValueError:
        raise MalformedRecord(
            line_no, f"concept {cid!r} has unknown semantic_type {obj.get('semantic_type')!r}"
        ) from None

    # Drop synonyms that collapse onto the preferred label or onto each other
    # after normalization, keeping first spellings.
    seen = {_normalize_phrase(label)}
    synonyms: list[str] = []
    for syn in raw_synonyms:
        key = _normalize_phrase(syn)
        if not key or key in seen:
            continue
        seen.add(key)
        synonyms.append(syn)
    return Concept(id=cid, preferred_label=label, synonyms=tuple(synonyms), semantic_type=sem)


def _parse_relation(obj: dict, line_no: int) -> Relation:
    subject = obj.get("subject")
    obj_id = obj.get("object")
    if not isinstance(subject, str) or not subject or not isinstance(obj_id, str) or not obj_id:
        raise MalformedRecord(line_no, "relation subject/object must be non-empty text")
    try:
        predicate = RelationType(obj.get("predicate"))
    except ValueError:
        raise MalformedRecord(
            line_no, f"unknown relation predicate {obj.get('predicate')!r}"
        ) from None
    return Relation(subject=subject, predicate=predicate, object=obj_id)


def _find_is_a_cycle(children: dict[ConceptId, list[ConceptId]]) -> list[ConceptId] | None:
    """Return one cycle path (first node repeated at the end), or None."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[ConceptId, int] = {}
    stack: list[ConceptId] = []

    def visit(node: ConceptId) -> list[ConceptId] | None:
        color[node] = GRAY
        stack.append(node)
        for child in children.get(node, ()):
            state = color.get(child, WHITE)
            if state == GRAY:
                start = stack.index(child)
                return stack[start:] + [child]
            if state == WHITE:
                cycle = visit(child)
                if cycle is not None:
                    return cycle
        stack.pop()
        color[node] = BLACK
        return None

    for node in list(children):
        if color.get(node, WHITE) == WHITE:
            cycle = visit(node)
            if cycle is not None:
                return cycle
    return None


def load_kg(path: str | Path) -> KnowledgeGraph:
    """Load and validate a knowledge-graph file.

    The file is UTF-8, one JSON object per line; blank lines are ignored.
    Raises MalformedRecord, DuplicateConcept, DanglingRelation, or
    HierarchyCycle on the first violation encountered.
    """
    concepts: dict[ConceptId, Concept] = {}
    relations: list[Relation] = []
    relation_lines: list[int] = []

    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise MalformedRecord(line_no, "record must be a JSON object")
            kind = obj.get("kind")
            if kind == "concept":
                concept = _parse_concept(obj, line_no)
                if concept.id in concepts:
                    raise DuplicateConcept(concept.id)
                concepts[concept.id] = concept
            elif kind == "relation":
                relations.append(_parse_relation(obj, line_no))
                relation_lines.append(line_no)
            else:
                raise MalformedRecord(line_no, f"unknown record kind {kind!r}")

    deduped: list[Relation] = []
    seen_triples: set[tuple[str, RelationType, str]] = set()
    for rel, line_no in zip(relations, relation_lines):
        for endpoint in (rel.subject, rel.object):
            if endpoint not in concepts:
                raise DanglingRelation(endpoint)
        if rel.predicate.is_hierarchical and rel.subject == rel.object:
            raise HierarchyCycle([rel.subject, rel.subject])
        triple = (rel.subject, rel.predicate, rel.object)
        if triple in seen_triples:
            continue
        seen_triples.add(triple)
        deduped.append(rel)

    children: dict[ConceptId, list[ConceptId]] = {}
    for rel in deduped:
        if rel.predicate.is_hierarchical:
            children.setdefault(rel.object, []).append(rel.subject)

    cycle = _find_is_a_cycle(children)
    if cycle is not None:
        raise HierarchyCycle(cycle)

    return KnowledgeGraph(concepts=concepts, relations=deduped, children=children)


def descendants(
    graph: KnowledgeGraph, concept_id: ConceptId, max_depth: int
) -> set[tuple[ConceptId, int]]:
    """All IS_A specializations of ``concept_id`` within ``max_depth`` hops.

    Each reachable concept is paired with its minimal hop distance; the
    start concept itself is excluded.
    """
    graph.concept(concept_id)
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")

    dist: dict[ConceptId, int] = {concept_id: 0}
    queue: deque[ConceptId] = deque([concept_id])
    while queue:
        node = queue.popleft()
        if dist[node] == max_depth:
            continue
        for child in graph.children.get(node, ()):
            if child not in dist:
                dist[child] = dist[node] + 1
                queue.append(child)
    return {(cid, d) for cid, d in dist.items() if cid != concept_id}


def related(
    graph: KnowledgeGraph, concept_id: ConceptId, predicate: RelationType
) -> set[ConceptId]:
    """Objects of all (concept_id, predicate, o) triples in the graph."""
    graph.concept(concept_id)
    return {
        r.object
        for r in graph.relations
        if r.subject == concept_id and r.predicate is predicate
    }
