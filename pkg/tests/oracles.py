"""Independent brute-force oracles and random-input generators.

Everything here recomputes expected answers from definitions, staying off
the production code paths it checks: traversal by plain layer lists,
edit distance by memoized recursion, BM25 by re-tokenizing raw snippets,
and retrieval by a full corpus scan.
"""

from __future__ import annotations

import math
import random
from functools import lru_cache

from focalmed.kg import Concept, ConceptId, KnowledgeGraph, RelationType, SemanticType
from focalmed.lexicon import normalize
from focalmed.parser import (
    ConceptConstraint,
    IntentPhraseTable,
    Origin,
    StructuredQuery,
    relax,
)
from focalmed.retrieval import FREQ_CAP, STRUCTURAL_FACTOR, RetrievalConfig
from focalmed.tagger import Field, Snippet, TaggedSnippet, tag_snippet


# ---------------------------------------------------------------------------
# Graph traversal


def bfs_hops(children: dict[str, list[str]], start: str, max_depth: int) -> dict[str, int]:
    """Layer-by-layer breadth-first hop distances, start excluded."""
    hops: dict[str, int] = {}
    frontier = [start]
    visited = {start}
    depth = 0
    while frontier and depth < max_depth:
        depth += 1
        nxt: list[str] = []
        for node in frontier:
            for child in children.get(node, []):
                if child not in visited:
                    visited.add(child)
                    hops[child] = depth
                    nxt.append(child)
        frontier = nxt
    return hops


def reachable(children: dict[str, list[str]], start: str) -> set[str]:
    """Transitive closure from one node over the children relation."""
    seen: set[str] = set()
    stack = [start]
    while stack:
        node = stack.pop()
        for child in children.get(node, []):
            if child not in seen:
                seen.add(child)
                stack.append(child)
    return seen


# ---------------------------------------------------------------------------
# Edit distance, straight from the recursive definition


def dl_distance(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def d(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        best = min(
            d(i - 1, j) + 1,
            d(i, j - 1) + 1,
            d(i - 1, j - 1) + (0 if a[i - 1] == b[j - 1] else 1),
        )
        if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
            best = min(best, d(i - 2, j - 2) + 1)
        return best

    return d(len(a), len(b))


# ---------------------------------------------------------------------------
# Dictionary matching


def all_matching_spans(words: list[str], phrases: set[str]) -> list[tuple[int, int]]:
    """Every (start, end) whose joined words form a known phrase."""
    spans = []
    for start in range(len(words)):
        for end in range(start + 1, len(words) + 1):
            if " ".join(words[start:end]) in phrases:
                spans.append((start, end))
    return spans


# ---------------------------------------------------------------------------
# nDCG by direct formula


def ndcg_formula(ranked_grades: list[int], all_grades: list[int], k: int) -> float:
    dcg = sum(
        (2**g - 1) / math.log2(i + 1) for i, g in enumerate(ranked_grades[:k], start=1)
    )
    ideal = sorted(all_grades, reverse=True)[:k]
    idcg = sum((2**g - 1) / math.log2(i + 1) for i, g in enumerate(ideal, start=1))
    return dcg / idcg


# ---------------------------------------------------------------------------
# Retrieval scoring by full corpus scan


def snippet_term_counts(snippet: Snippet) -> dict[str, int]:
    counts: dict[str, int] = {}
    texts = [snippet.doc_title, *snippet.section_path, *snippet.sentences]
    for text in texts:
        for tok in normalize(text):
            counts[tok.normalized] = counts.get(tok.normalized, 0) + 1
    return counts


def bm25_formula(
    corpus: list[TaggedSnippet], cfg: RetrievalConfig, terms: list[str], snippet_id: str
) -> float:
    """Okapi BM25 recomputed from raw snippet text, no index involved."""
    n = len(corpus)
    counts = {ts.snippet.snippet_id: snippet_term_counts(ts.snippet) for ts in corpus}
    lengths = {sid: sum(c.values()) for sid, c in counts.items()}
    avg = sum(lengths.values()) / n if n else 0.0
    score = 0.0
    for term in terms:
        tf = counts[snippet_id].get(term, 0)
        if tf == 0:
            continue
        df = sum(1 for c in counts.values() if term in c)
        idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
        score += idf * tf * (cfg.k1 + 1.0) / (tf + cfg.k1 * (1.0 - cfg.b + cfg.b * lengths[snippet_id] / avg))
    return score


def _phrase_in_sections(phrase: str, snippet: Snippet) -> bool:
    needle = phrase.split(" ")
    for element in snippet.section_path:
        words = [t.normalized for t in normalize(element)]
        for i in range(len(words) - len(needle) + 1):
            if words[i : i + len(needle)] == needle:
                return True
    return False


def full_scan_score(
    sq: StructuredQuery,
    corpus: list[TaggedSnippet],
    cfg: RetrievalConfig,
    intents: IntentPhraseTable,
) -> list[tuple[str, float, float, float, float]]:
    """Score every snippet by direct tag/text inspection; returns the ranked
    (id, fused, relation, concept, text) tuples after zero filtering."""
    phrase_groups: dict[RelationType, list[str]] = {}
    for phrase in sorted(intents.phrases):
        phrase_groups.setdefault(intents.phrases[phrase], []).append(phrase)

    relation_scores: dict[str, float] = {}
    concept_sums: dict[str, float] = {}
    text_raw: dict[str, float] = {}

    for ts in corpus:
        sid = ts.snippet.snippet_id
        tagged_pairs = {(t.concept_id, t.relation_type) for t in ts.relation_tags}
        tagged_concepts = {t.concept_id for t in ts.concept_tags}

        rel = 0.0
        for constraint in sq.concepts:
            for intent in sq.relation_intents:
                if (constraint.concept_id, intent) in tagged_pairs:
                    rel += constraint.weight
                elif constraint.concept_id in tagged_concepts and any(
                    _phrase_in_sections(p, ts.snippet) for p in phrase_groups.get(intent, [])
                ):
                    rel += STRUCTURAL_FACTOR * constraint.weight
        if rel > 0:
            relation_scores[sid] = rel

        con = 0.0
        for constraint in sq.concepts:
            for fld in Field:
                freq = sum(
                    1
                    for t in ts.concept_tags
                    if t.concept_id == constraint.concept_id and t.field == fld
                )
                if freq:
                    con += constraint.weight * cfg.field_weights[fld] * min(freq, FREQ_CAP)
        if con > 0:
            concept_sums[sid] = con

        txt = bm25_formula(corpus, cfg, sq.residual_terms, sid)
        if txt > 0:
            text_raw[sid] = txt

    total_weight = sum(c.weight for c in sq.concepts)
    denom = total_weight * max(cfg.field_weights.values()) * FREQ_CAP
    candidates = set(relation_scores) | set(concept_sums) | set(text_raw)
    max_text = max((text_raw.get(s, 0.0) for s in candidates), default=0.0)

    rows = []
    for sid in sorted(candidates):
        rel = relation_scores.get(sid, 0.0)
        con = concept_sums.get(sid, 0.0) / denom if denom > 0 else 0.0
        txt = text_raw.get(sid, 0.0) / max_text if max_text > 0 else 0.0
        fused = cfg.w_r * rel + cfg.w_c * con + cfg.w_t * txt
        if fused > 0:
            rows.append((sid, fused, rel, con, txt))
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows[: cfg.limit]


def full_scan_execute(
    sq: StructuredQuery,
    corpus: list[TaggedSnippet],
    cfg: RetrievalConfig,
    intents: IntentPhraseTable,
) -> list[tuple[str, float]]:
    """The relaxation loop around full_scan_score, mirroring the merge
    contract (previously returned snippets stay and keep their max score)."""
    counts = {ts.snippet.snippet_id: snippet_term_counts(ts.snippet) for ts in corpus}
    n = len(corpus)

    def idf(term: str) -> float:
        df = sum(1 for c in counts.values() if term in c)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    rows = full_scan_score(sq, corpus, cfg, intents)
    kept = {sid: score for sid, score, *_ in rows}
    order = [sid for sid, *_ in rows]
    current = sq
    steps = 0
    while len(order) < cfg.min_results and steps < cfg.max_relax_steps:
        relaxed = relax(current, idf=idf)
        if relaxed is None:
            break
        current = relaxed
        for sid, score, *_ in full_scan_score(current, corpus, cfg, intents):
            if sid in kept:
                kept[sid] = max(kept[sid], score)
            elif len(order) < cfg.limit:
                kept[sid] = score
                order.append(sid)
        steps += 1
    return sorted(kept.items(), key=lambda kv: (-kv[1], kv[0]))


# ---------------------------------------------------------------------------
# Random inputs

VOCAB = [
    "arteritis", "befloxin", "cardiomax", "dermatol", "edemafen", "fibrosis",
    "gastrene", "hepatika", "ischemol", "jointase", "keratol", "lungwort",
    "myalgine", "neuraxin", "osteopen", "pulmafil", "quorvex", "renalin",
    "synovex", "thrombol", "uveitis", "vasculin", "xanthoma", "zymogren",
]

FILLER = ["the", "of", "in", "with", "severe", "acute", "chronic", "patients", "clinical", "guideline"]


def random_graph(rng: random.Random, n_concepts: int = 8) -> KnowledgeGraph:
    """Concept labels drawn from VOCAB; IS_A edges only point to earlier
    concepts, so the hierarchy is a DAG by construction."""
    labels = rng.sample(VOCAB, n_concepts)
    concepts = {}
    children: dict[str, list[str]] = {}
    for i, label in enumerate(labels):
        cid = f"R{i:03d}"
        synonyms = ()
        if rng.random() < 0.3:
            synonyms = (f"{rng.choice(FILLER)} {label}",)
        concepts[cid] = Concept(
            id=cid,
            preferred_label=label,
            synonyms=synonyms,
            semantic_type=rng.choice(list(SemanticType)),
        )
    relations = []
    for i in range(1, n_concepts):
        if rng.random() < 0.6:
            parent = f"R{rng.randrange(i):03d}"
            child = f"R{i:03d}"
            from focalmed.kg import Relation

            relations.append(Relation(child, RelationType.IS_A, parent))
            children.setdefault(parent, []).append(child)
    return KnowledgeGraph(concepts=concepts, relations=relations, children=children)


def random_snippet(rng: random.Random, graph: KnowledgeGraph, intents: IntentPhraseTable, sid: str) -> Snippet:
    label_pool = [c.preferred_label for c in graph.concepts.values()]
    intent_pool = sorted(intents.phrases)

    def some_text(concept_p: float, intent_p: float, max_words: int = 4) -> str:
        parts = []
        if rng.random() < concept_p:
            parts.append(rng.choice(label_pool))
        if rng.random() < intent_p:
            parts.append(rng.choice(intent_pool))
        parts.extend(rng.choice(FILLER) for _ in range(rng.randrange(max_words)))
        rng.shuffle(parts)
        return " ".join(parts) if parts else rng.choice(FILLER)

    path_len = rng.randrange(3)
    section_path = tuple(some_text(0.3, 0.5) for _ in range(path_len))
    sentences = tuple(some_text(0.5, 0.3, 6) for _ in range(rng.randrange(3)))
    return Snippet(
        snippet_id=sid,
        doc_id=f"doc-{sid}",
        doc_title=some_text(0.7, 0.1),
        section_path=section_path,
        sentences=sentences,
    )


def random_tagged_corpus(
    rng: random.Random,
    graph: KnowledgeGraph,
    lexicon,
    intents: IntentPhraseTable,
    max_snippets: int = 12,
) -> list[TaggedSnippet]:
    n = rng.randrange(1, max_snippets + 1)
    return [
        tag_snippet(random_snippet(rng, graph, intents, f"T{i:03d}"), graph, lexicon, intents)
        for i in range(n)
    ]


def random_structured_query(rng: random.Random, graph: KnowledgeGraph, intents: IntentPhraseTable) -> StructuredQuery:
    cids = rng.sample(sorted(graph.concepts), k=min(len(graph.concepts), rng.randrange(1, 4)))
    constraints = []
    for cid in cids:
        roll = rng.random()
        if roll < 0.6:
            constraints.append(ConceptConstraint(cid, 1.0, Origin.EXACT))
        elif roll < 0.8:
            constraints.append(ConceptConstraint(cid, 0.8, Origin.CORRECTED))
        else:
            hop = rng.randrange(1, 3)
            parent = 1.0 if rng.random() < 0.7 else 0.8
            constraints.append(ConceptConstraint(cid, parent * 0.5**hop, Origin.EXPANDED, hop=hop))
    all_relations = sorted({r for r in intents.phrases.values()}, key=lambda r: r.value)
    intents_chosen = rng.sample(all_relations, k=rng.randrange(0, min(3, len(all_relations)) + 1))
    residuals = rng.sample(FILLER + VOCAB, k=rng.randrange(0, 3))
    return StructuredQuery(
        original="synthetic",
        concepts=constraints,
        relation_intents=intents_chosen,
        cohorts=[],
        residual_terms=residuals,
    )
