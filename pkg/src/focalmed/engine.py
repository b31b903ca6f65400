"""Wires graph, lexicon, intent table, and indexes into one search engine.

FULL mode runs the structured pipeline (parse, hierarchy expansion,
federated execution with relaxation). TEXT mode is the plain BM25 baseline
over all query tokens, kept around so the two can be compared on the same
corpus. Everything the engine holds is immutable, so one engine instance
serves unlimited concurrent callers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import EmptyQuery
from .kg import KnowledgeGraph
from .lexicon import Lexicon, build_lexicon, normalize, recognize
from .parser import (
    DEFAULT_COHORT_KEYWORDS,
    DEFAULT_EXPANSION_DEPTH,
    IntentPhraseTable,
    StructuredQuery,
    expand,
    parse,
)
from .retrieval import IndexSet, RetrievalConfig, ScoredResult, execute_traced, explain, text_only

MODE_FULL = "full"
MODE_TEXT = "text"
MODES = (MODE_FULL, MODE_TEXT)


@dataclass
class SearchOutcome:
    results: list[ScoredResult]
    parsed: StructuredQuery | None
    mode: str


class SearchEngine:
    def __init__(
        self,
        graph: KnowledgeGraph,
        indexes: IndexSet | None,
        cfg: RetrievalConfig | None = None,
        intents: IntentPhraseTable | None = None,
        cohort_keywords: frozenset[str] = DEFAULT_COHORT_KEYWORDS,
        expand_depth: int = DEFAULT_EXPANSION_DEPTH,
        lexicon: Lexicon | None = None,
    ):
        self.graph = graph
        self.indexes = indexes
        self.cfg = cfg or RetrievalConfig()
        self.intents = intents or IntentPhraseTable.default()
        self.cohort_keywords = cohort_keywords
        self.expand_depth = expand_depth
        self.lexicon = lexicon or build_lexicon(graph)

    @property
    def corpus_size(self) -> int:
        return self.indexes.n_docs if self.indexes is not None else 0

    def parse_query(self, query: str) -> StructuredQuery:
        return parse(query, self.graph, self.lexicon, self.intents, self.cohort_keywords)

    def search(self, query: str, mode: str = MODE_FULL, limit: int | None = None) -> SearchOutcome:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        cfg = self.cfg if limit is None else replace(self.cfg, limit=limit)
        if mode == MODE_TEXT:
            terms = [t.normalized for t in normalize(query)]
            if not terms:
                raise EmptyQuery(f"query {query!r} is empty after normalization")
            return SearchOutcome(
                results=text_only(self.indexes, cfg, terms, cfg.limit),
                parsed=None,
                mode=mode,
            )
        sq = self.parse_query(query)
        expanded = expand(sq, self.graph, self.expand_depth)
        results, final_sq = execute_traced(expanded, self.indexes, cfg, self.intents)
        return SearchOutcome(results=results, parsed=final_sq, mode=mode)

    def explain(self, result: ScoredResult) -> str:
        return explain(result, self.cfg)

    def top_sentence(self, snippet_id: str, sq: StructuredQuery | None, query: str) -> str:
        """The sentence carrying the most query evidence, for display."""
        assert self.indexes is not None
        snippet = self.indexes.snippets[snippet_id]
        if not snippet.sentences:
            return ""
        wanted = {c.concept_id for c in sq.concepts} | set(sq.cohorts) if sq else set()
        terms = set(sq.residual_terms) if sq else {t.normalized for t in normalize(query)}
        best_idx, best_hits = 0, -1
        for i, sentence in enumerate(snippet.sentences):
            tokens = normalize(sentence)
            hits = sum(1 for m in recognize(tokens, self.lexicon) if m.concept_id in wanted)
            hits += sum(1 for t in tokens if t.normalized in terms)
            if hits > best_hits:
                best_idx, best_hits = i, hits
        return snippet.sentences[best_idx]


def render_structured_query(sq: StructuredQuery, graph: KnowledgeGraph) -> dict:
    """JSON-friendly view of a parsed query with concept labels filled in."""

    def label(cid: str) -> str:
        return graph.concepts[cid].preferred_label if cid in graph.concepts else cid

    return {
        "original": sq.original,
        "concepts": [
            {
                "concept_id": c.concept_id,
                "label": label(c.concept_id),
                "origin": c.origin.value,
                "hop": c.hop,
                "weight": c.weight,
            }
            for c in sq.concepts
        ],
        "relation_intents": [r.value for r in sq.relation_intents],
        "cohorts": [
            {"value": c, "label": label(c)} if c in graph.concepts else {"value": c, "label": c}
            for c in sq.cohorts
        ],
        "residual_terms": list(sq.residual_terms),
        "relaxation_log": list(sq.relaxation_log),
    }


def render_result(
    result: ScoredResult, engine: SearchEngine, sq: StructuredQuery | None, query: str
) -> dict:
    assert engine.indexes is not None
    snippet = engine.indexes.snippets[result.snippet_id]
    matched_terms: list[str] = []
    if sq is not None:
        for c in sq.concepts:
            concept = engine.graph.concepts.get(c.concept_id)
            if concept is not None:
                matched_terms.append(concept.preferred_label)
                matched_terms.extend(concept.synonyms)
        matched_terms.extend(sq.residual_terms)
    else:
        matched_terms.extend(t.normalized for t in normalize(query))
    return {
        "snippet_id": result.snippet_id,
        "doc_id": snippet.doc_id,
        "doc_title": snippet.doc_title,
        "section_path": list(snippet.section_path),
        "top_sentence": engine.top_sentence(result.snippet_id, sq, query),
        "score": result.score,
        "components": {
            "relation": result.relation_score,
            "concept": result.concept_score,
            "text": result.text_score,
        },
        "explanation": list(result.matched_elements),
        "matched_terms": matched_terms,
    }
