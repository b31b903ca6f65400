"""Query understanding: rewrite a clinical query into structured form.

Pipeline: normalize -> intent-phrase match -> concept recognition ->
spell-correction fallback -> cohort detection -> residual terms. Intent
phrases are consumed before concepts so that e.g. "diagnosis" is never
swallowed by a concept label, and the longest intent phrase wins.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

from .errors import EmptyQuery
from .kg import ConceptId, KnowledgeGraph, RelationType, SemanticType, descendants
from .lexicon import CORRECTED_WEIGHT, Lexicon, Mention, Token, correct, normalize, recognize

EXACT_WEIGHT = 1.0
EXPANSION_DISCOUNT = 0.5
DEFAULT_EXPANSION_DEPTH = 1

DEFAULT_INTENT_PHRASES: dict[str, RelationType] = {
    "differential diagnosis": RelationType.HAS_DIFFERENTIAL_DIAGNOSIS,
    "treatment": RelationType.HAS_TREATMENT,
    "therapy": RelationType.HAS_TREATMENT,
    "drug of choice": RelationType.HAS_TREATMENT,
    "management": RelationType.HAS_TREATMENT,
    "adverse reactions": RelationType.HAS_ADVERSE_REACTION,
    "side effects": RelationType.HAS_ADVERSE_REACTION,
    "adverse effects": RelationType.HAS_ADVERSE_REACTION,
    "dosage": RelationType.HAS_DOSAGE,
    "dose": RelationType.HAS_DOSAGE,
    "dosing": RelationType.HAS_DOSAGE,
    "cause": RelationType.HAS_CAUSE,
    "causes": RelationType.HAS_CAUSE,
    "etiology": RelationType.HAS_CAUSE,
    "diagnosis": RelationType.HAS_DIAGNOSTIC_TEST,
    "workup": RelationType.HAS_DIAGNOSTIC_TEST,
    "test indicated": RelationType.HAS_DIAGNOSTIC_TEST,
    "diagnostic test": RelationType.HAS_DIAGNOSTIC_TEST,
}

DEFAULT_COHORT_KEYWORDS = frozenset({"pregnancy", "pregnant", "pediatric", "geriatric"})


class Origin(Enum):
    EXACT = "EXACT"
    CORRECTED = "CORRECTED"
    EXPANDED = "EXPANDED"


@dataclass(frozen=True)
class ConceptConstraint:
    concept_id: ConceptId
    weight: float
    origin: Origin
    hop: int = 0


@dataclass
class IntentPhraseTable:
    """Normalized phrase -> relation type; no phrase maps to two types."""

    phrases: dict[str, RelationType]
    max_phrase_len: int

    @classmethod
    def from_mapping(cls, mapping: dict[str, RelationType]) -> "IntentPhraseTable":
        phrases = {" ".join(p.lower().split()): r for p, r in mapping.items()}
        max_len = max((p.count(" ") + 1 for p in phrases), default=0)
        return cls(phrases=phrases, max_phrase_len=max_len)

    @classmethod
    def default(cls) -> "IntentPhraseTable":
        return cls.from_mapping(DEFAULT_INTENT_PHRASES)

    def relation_for(self, phrase: str) -> RelationType | None:
        return self.phrases.get(phrase)


@dataclass
class StructuredQuery:
    original: str
    concepts: list[ConceptConstraint] = field(default_factory=list)
    relation_intents: list[RelationType] = field(default_factory=list)
    cohorts: list[str] = field(default_factory=list)
    residual_terms: list[str] = field(default_factory=list)
    relaxation_log: list[str] = field(default_factory=list)

    def element_count(self) -> int:
        return (
            len(self.concepts)
            + len(self.relation_intents)
            + len(self.cohorts)
            + len(self.residual_terms)
        )


def scan_intent_phrases(
    tokens: list[Token], intents: IntentPhraseTable
) -> list[tuple[int, int, RelationType]]:
    """Greedy longest-match of intent phrases over normalized tokens."""
    matches: list[tuple[int, int, RelationType]] = []
    n = len(tokens)
    i = 0
    while i < n:
        hit = None
        for span in range(min(intents.max_phrase_len, n - i), 0, -1):
            phrase = " ".join(t.normalized for t in tokens[i : i + span])
            relation = intents.relation_for(phrase)
            if relation is not None:
                hit = (i, i + span, relation)
                break
        if hit is not None:
            matches.append(hit)
            i = hit[1]
        else:
            i += 1
    return matches


def _add_constraint(by_id: dict[ConceptId, ConceptConstraint], candidate: ConceptConstraint) -> None:
    existing = by_id.get(candidate.concept_id)
    if existing is None or candidate.weight > existing.weight:
        by_id[candidate.concept_id] = candidate


def parse(
    query: str,
    graph: KnowledgeGraph,
    lexicon: Lexicon,
    intents: IntentPhraseTable,
    cohort_keywords: frozenset[str] = DEFAULT_COHORT_KEYWORDS,
    corrected_weight: float = CORRECTED_WEIGHT,
) -> StructuredQuery:
    """Rewrite a raw clinical query into a StructuredQuery.

    Raises EmptyQuery when nothing remains after normalization.
    """
    tokens = normalize(query)
    if not tokens:
        raise EmptyQuery(f"query {query!r} is empty after normalization")

    n = len(tokens)
    covered = [False] * n

    intent_matches = scan_intent_phrases(tokens, intents)
    relation_intents: list[RelationType] = []
    for start, end, relation in intent_matches:
        for i in range(start, end):
            covered[i] = True
        if relation not in relation_intents:
            relation_intents.append(relation)

    # Concept recognition runs per contiguous uncovered segment so phrases
    # never match across a consumed intent phrase.
    mentions: list[Mention] = []
    seg_start = 0
    segments: list[tuple[int, list[Token]]] = []
    for i in range(n + 1):
        if i == n or covered[i]:
            if seg_start < i:
                segments.append((seg_start, tokens[seg_start:i]))
            seg_start = i + 1
    for offset, seg_tokens in segments:
        for m in recognize(seg_tokens, lexicon):
            mentions.append(replace(m, start=m.start + offset, end=m.end + offset))

    constraints: dict[ConceptId, ConceptConstraint] = {}
    cohorts: list[str] = []
    for m in mentions:
        for i in range(m.start, m.end):
            covered[i] = True
        concept = graph.concept(m.concept_id)
        if concept.semantic_type is SemanticType.COHORT:
            if m.concept_id not in cohorts:
                cohorts.append(m.concept_id)
        else:
            _add_constraint(
                constraints,
                ConceptConstraint(m.concept_id, EXACT_WEIGHT, Origin.EXACT),
            )

    # Spell-correction fallback for still-uncovered single tokens.
    for i in range(n):
        if covered[i]:
            continue
        fixed = correct(tokens[i], lexicon)
        if fixed is None:
            continue
        phrase, _dist = fixed
        for cid, _ in lexicon.concepts_for(phrase):
            concept = graph.concept(cid)
            if concept.semantic_type is SemanticType.COHORT:
                if cid not in cohorts:
                    cohorts.append(cid)
            else:
                _add_constraint(
                    constraints,
                    ConceptConstraint(cid, corrected_weight, Origin.CORRECTED),
                )
        covered[i] = True

    for i in range(n):
        if not covered[i] and tokens[i].normalized in cohort_keywords:
            if tokens[i].normalized not in cohorts:
                cohorts.append(tokens[i].normalized)
            covered[i] = True

    residual_terms = [tokens[i].normalized for i in range(n) if not covered[i]]

    return StructuredQuery(
        original=query,
        concepts=list(constraints.values()),
        relation_intents=relation_intents,
        cohorts=cohorts,
        residual_terms=residual_terms,
    )


def expand(
    sq: StructuredQuery,
    graph: KnowledgeGraph,
    depth: int,
    discount: float = EXPANSION_DISCOUNT,
) -> StructuredQuery:
    """Add hierarchy specializations of EXACT/CORRECTED constraints.

    Each descendant gets origin EXPANDED with weight parent_weight *
    discount**hop; existing constraints are kept, and a concept reachable
    several ways keeps its maximum weight.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    by_id: dict[ConceptId, ConceptConstraint] = {c.concept_id: c for c in sq.concepts}
    additions: dict[ConceptId, ConceptConstraint] = {}
    for constraint in sq.concepts:
        if constraint.origin is Origin.EXPANDED:
            continue
        for cid, hop in sorted(descendants(graph, constraint.concept_id, depth)):
            candidate = ConceptConstraint(
                cid, constraint.weight * discount**hop, Origin.EXPANDED, hop=hop
            )
            existing = by_id.get(cid) or additions.get(cid)
            if existing is None or candidate.weight > existing.weight:
                additions[cid] = candidate
    merged = [c for c in sq.concepts if c.concept_id not in additions]
    merged.extend(additions[cid] for cid in sorted(additions))
    return replace(sq, concepts=merged)


def relax(
    sq: StructuredQuery,
    idf: Callable[[str], float] | None = None,
) -> StructuredQuery | None:
    """Drop the single least-informative query element, or None if stuck.

    Priority: residual term (lowest corpus IDF, ties lexicographic), then
    lowest-weight EXPANDED constraint, then cohort, then CORRECTED
    constraint, then relation intent. EXACT constraints are never dropped.
    """
    if sq.residual_terms:
        if idf is None:
            victim = min(sq.residual_terms)
        else:
            victim = min(sq.residual_terms, key=lambda t: (idf(t), t))
        remaining = list(sq.residual_terms)
        remaining.remove(victim)
        return replace(
            sq,
            residual_terms=remaining,
            relaxation_log=sq.relaxation_log + [f"residual '{victim}'"],
        )

    expanded = [c for c in sq.concepts if c.origin is Origin.EXPANDED]
    if expanded:
        victim_c = min(expanded, key=lambda c: (c.weight, c.concept_id))
        return replace(
            sq,
            concepts=[c for c in sq.concepts if c is not victim_c],
            relaxation_log=sq.relaxation_log + [f"expanded concept {victim_c.concept_id}"],
        )

    if sq.cohorts:
        victim = sq.cohorts[0]
        return replace(
            sq,
            cohorts=sq.cohorts[1:],
            relaxation_log=sq.relaxation_log + [f"cohort '{victim}'"],
        )

    corrected = [c for c in sq.concepts if c.origin is Origin.CORRECTED]
    if corrected:
        victim_c = min(corrected, key=lambda c: (c.weight, c.concept_id))
        return replace(
            sq,
            concepts=[c for c in sq.concepts if c is not victim_c],
            relaxation_log=sq.relaxation_log + [f"corrected concept {victim_c.concept_id}"],
        )

    if sq.relation_intents:
        victim_r = sq.relation_intents[0]
        return replace(
            sq,
            relation_intents=sq.relation_intents[1:],
            relaxation_log=sq.relaxation_log + [f"intent {victim_r.value}"],
        )

    return None
