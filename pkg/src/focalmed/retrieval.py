"""Federated snippet retrieval: three indexes, score fusion, relaxation.

A structured query runs as three sub-queries. The relation index rewards
snippets tagged with (concept, relation) pairs the query asks for; the
concept index rewards concept mentions weighted by field; the text index
scores leftover terms with BM25. The fused score is a weighted sum, and
sparse result sets trigger stepwise query relaxation with a merge that
never drops or downgrades an already-returned snippet.

All indexes are immutable after build and safe for concurrent readers; a
rebuild publishes a whole new IndexSet.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field, replace
from pathlib import Path

from .errors import DuplicateSnippetId, IndexNotBuilt, SnapshotFormatError
from .kg import ConceptId, RelationType
from .lexicon import SCAN_SPAN_CAP, normalize
from .parser import IntentPhraseTable, StructuredQuery, relax
from .tagger import FIELD_ORDER, Field, Snippet, TaggedSnippet, snippet_from_dict, snippet_to_dict

SNAPSHOT_MAGIC = "FMIX"
SNAPSHOT_VERSION = 1

FREQ_CAP = 3  # concept-frequency cap, guards against long-document dominance
STRUCTURAL_FACTOR = 0.5  # discount for intent-phrase-in-section evidence


@dataclass
class RetrievalConfig:
    w_r: float = 3.0
    w_c: float = 1.0
    w_t: float = 1.0
    field_weights: dict[Field, float] = dc_field(
        default_factory=lambda: {
            Field.DOC_TITLE: 4.0,
            Field.SECTION_TITLE: 3.0,
            Field.BREADCRUMB: 2.0,
            Field.SENTENCE: 1.0,
        }
    )
    k1: float = 1.2
    b: float = 0.75
    min_results: int = 3
    max_relax_steps: int = 5
    limit: int = 10

    def __post_init__(self):
        weights = [self.w_r, self.w_c, self.w_t, *self.field_weights.values()]
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        if self.limit < 1:
            raise ValueError("limit must be at least 1")

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "RetrievalConfig":
        """Build a config from flat key=value text (unknown keys rejected)."""
        kwargs: dict = {}
        field_weights = dict(cls().field_weights)
        for key, value in mapping.items():
            key = key.strip().lower()
            if key in ("w_r", "w_c", "w_t", "k1", "b"):
                kwargs[key] = float(value)
            elif key in ("min_results", "max_relax_steps", "limit"):
                kwargs[key] = int(value)
            elif key.startswith("field_weight."):
                field_weights[Field(key.split(".", 1)[1].upper())] = float(value)
            else:
                raise ValueError(f"unknown retrieval config key {key!r}")
        kwargs["field_weights"] = field_weights
        return cls(**kwargs)


@dataclass(frozen=True)
class ScoredResult:
    snippet_id: str
    score: float
    relation_score: float
    concept_score: float
    text_score: float
    matched_elements: tuple[str, ...]

    @property
    def components(self) -> tuple[float, float, float]:
        return (self.relation_score, self.concept_score, self.text_score)


@dataclass
class IndexSet:
    """Relation, concept, and text indexes plus the snippet store.

    Postings are kept in canonical sorted order so that querying is a
    deterministic function of the tagged corpus regardless of input order,
    and so snapshots round-trip to bit-identical results.
    """

    relation: dict[tuple[ConceptId, RelationType], list[str]]
    concept: dict[ConceptId, list[tuple[str, Field, int]]]
    text: dict[str, list[tuple[str, int]]]
    doc_len: dict[str, int]
    snippets: dict[str, Snippet]
    structural: dict[str, frozenset[str]]

    @property
    def n_docs(self) -> int:
        return len(self.doc_len)

    @property
    def avg_len(self) -> float:
        return sum(self.doc_len.values()) / self.n_docs if self.n_docs else 0.0

    def df(self, term: str) -> int:
        return len(self.text.get(term, ()))

    def idf(self, term: str) -> float:
        df = self.df(term)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))


def _snippet_tokens(snippet: Snippet) -> list[str]:
    tokens: list[str] = [t.normalized for t in normalize(snippet.doc_title)]
    for element in snippet.section_path:
        tokens.extend(t.normalized for t in normalize(element))
    for sentence in snippet.sentences:
        tokens.extend(t.normalized for t in normalize(sentence))
    return tokens


def _structural_ngrams(snippet: Snippet) -> frozenset[str]:
    grams: set[str] = set()
    for element in snippet.section_path:
        words = [t.normalized for t in normalize(element)]
        for size in range(1, min(SCAN_SPAN_CAP, len(words)) + 1):
            for i in range(len(words) - size + 1):
                grams.add(" ".join(words[i : i + size]))
    return frozenset(grams)


def build_indexes(corpus: list[TaggedSnippet]) -> IndexSet:
    """Populate all three indexes from a tagged corpus with unique ids."""
    relation: dict[tuple[ConceptId, RelationType], list[str]] = {}
    concept_raw: dict[ConceptId, dict[tuple[str, Field], int]] = {}
    text: dict[str, list[tuple[str, int]]] = {}
    doc_len: dict[str, int] = {}
    snippets: dict[str, Snippet] = {}
    structural: dict[str, frozenset[str]] = {}

    for ts in corpus:
        sid = ts.snippet.snippet_id
        if sid in snippets:
            raise DuplicateSnippetId(sid)
        snippets[sid] = ts.snippet

        for rtag in ts.relation_tags:
            relation.setdefault((rtag.concept_id, rtag.relation_type), []).append(sid)
        for ctag in ts.concept_tags:
            per = concept_raw.setdefault(ctag.concept_id, {})
            per[(sid, ctag.field)] = per.get((sid, ctag.field), 0) + 1

        tokens = _snippet_tokens(ts.snippet)
        doc_len[sid] = len(tokens)
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for term, tf in counts.items():
            text.setdefault(term, []).append((sid, tf))

        structural[sid] = _structural_ngrams(ts.snippet)

    for postings in relation.values():
        postings.sort()
        deduped = []
        for sid in postings:
            if not deduped or deduped[-1] != sid:
                deduped.append(sid)
        postings[:] = deduped
    concept = {
        cid: sorted(
            ((sid, fld, freq) for (sid, fld), freq in per.items()),
            key=lambda p: (p[0], FIELD_ORDER[p[1]]),
        )
        for cid, per in concept_raw.items()
    }
    for postings_t in text.values():
        postings_t.sort()

    return IndexSet(
        relation=relation,
        concept=concept,
        text=text,
        doc_len=doc_len,
        snippets=snippets,
        structural=structural,
    )


def bm25_term_weight(indexes: IndexSet, cfg: RetrievalConfig, term: str, sid: str, tf: int) -> float:
    idf = indexes.idf(term)
    length_norm = 1.0 - cfg.b + cfg.b * indexes.doc_len[sid] / indexes.avg_len
    return idf * tf * (cfg.k1 + 1.0) / (tf + cfg.k1 * length_norm)


def bm25(indexes: IndexSet, cfg: RetrievalConfig, terms: list[str], sid: str) -> float:
    """Okapi BM25 of one snippet for the given query terms (0 if absent)."""
    score = 0.0
    for term in terms:
        for posting_sid, tf in indexes.text.get(term, ()):
            if posting_sid == sid:
                score += bm25_term_weight(indexes, cfg, term, sid, tf)
                break
    return score


def _bm25_accumulate(
    indexes: IndexSet, cfg: RetrievalConfig, terms: list[str]
) -> dict[str, float]:
    """Per-snippet BM25 sums, accumulated term-major in query order."""
    scores: dict[str, float] = {}
    for term in terms:
        for sid, tf in indexes.text.get(term, ()):
            scores[sid] = scores.get(sid, 0.0) + bm25_term_weight(indexes, cfg, term, sid, tf)
    return scores


def _phrases_by_relation(intents: IntentPhraseTable) -> dict[RelationType, list[str]]:
    grouped: dict[RelationType, list[str]] = {}
    for phrase in sorted(intents.phrases):
        grouped.setdefault(intents.phrases[phrase], []).append(phrase)
    return grouped


def _execute_once(
    sq: StructuredQuery,
    indexes: IndexSet,
    cfg: RetrievalConfig,
    intents: IntentPhraseTable,
) -> list[ScoredResult]:
    relation_score: dict[str, float] = {}
    concept_sum: dict[str, float] = {}
    notes: dict[str, list[str]] = {}

    def note(sid: str, text: str) -> None:
        notes.setdefault(sid, []).append(text)

    phrase_groups = _phrases_by_relation(intents)

    for constraint in sq.concepts:
        concept_postings = indexes.concept.get(constraint.concept_id, [])
        concept_sids = sorted({sid for sid, _, _ in concept_postings})
        for intent in sq.relation_intents:
            postings = indexes.relation.get((constraint.concept_id, intent), [])
            hit = set(postings)
            for sid in postings:
                relation_score[sid] = relation_score.get(sid, 0.0) + constraint.weight
                note(sid, f"relation {constraint.concept_id}:{intent.value} +{constraint.weight:g}")
            phrases = phrase_groups.get(intent, [])
            for sid in concept_sids:
                if sid in hit:
                    continue
                grams = indexes.structural.get(sid, frozenset())
                if any(p in grams for p in phrases):
                    bonus = STRUCTURAL_FACTOR * constraint.weight
                    relation_score[sid] = relation_score.get(sid, 0.0) + bonus
                    note(sid, f"structural {constraint.concept_id}:{intent.value} +{bonus:g}")

    total_weight = sum(c.weight for c in sq.concepts)
    max_field_weight = max(cfg.field_weights.values()) if cfg.field_weights else 0.0
    concept_denominator = total_weight * max_field_weight * FREQ_CAP
    for constraint in sq.concepts:
        for sid, fld, freq in indexes.concept.get(constraint.concept_id, []):
            contribution = constraint.weight * cfg.field_weights[fld] * min(freq, FREQ_CAP)
            concept_sum[sid] = concept_sum.get(sid, 0.0) + contribution
            note(
                sid,
                f"concept {constraint.concept_id} in {fld.value} x{min(freq, FREQ_CAP)} "
                f"w={constraint.weight:g}",
            )

    raw_text = _bm25_accumulate(indexes, cfg, sq.residual_terms)
    for sid in sorted(raw_text):
        note(sid, "terms " + " ".join(t for t in sq.residual_terms if _has_term(indexes, t, sid)))

    candidates = set(relation_score) | set(concept_sum) | {s for s, v in raw_text.items() if v > 0}
    max_text = max((raw_text.get(sid, 0.0) for sid in candidates), default=0.0)

    results: list[ScoredResult] = []
    for sid in sorted(candidates):
        rel = relation_score.get(sid, 0.0)
        con = concept_sum.get(sid, 0.0) / concept_denominator if concept_denominator > 0 else 0.0
        txt = raw_text.get(sid, 0.0) / max_text if max_text > 0 else 0.0
        fused = cfg.w_r * rel + cfg.w_c * con + cfg.w_t * txt
        if fused <= 0.0:
            continue
        results.append(
            ScoredResult(
                snippet_id=sid,
                score=fused,
                relation_score=rel,
                concept_score=con,
                text_score=txt,
                matched_elements=tuple(notes.get(sid, ())),
            )
        )
    results.sort(key=lambda r: (-r.score, r.snippet_id))
    return results[: cfg.limit]


def _has_term(indexes: IndexSet, term: str, sid: str) -> bool:
    return any(p_sid == sid for p_sid, _ in indexes.text.get(term, ()))


def _merge(
    kept: list[ScoredResult], incoming: list[ScoredResult], limit: int
) -> list[ScoredResult]:
    # Previously returned snippets are never dropped and never lose score.
    by_id = {r.snippet_id: r for r in kept}
    for r in incoming:
        old = by_id.get(r.snippet_id)
        if old is None:
            if len(by_id) < limit:
                by_id[r.snippet_id] = r
        elif r.score > old.score:
            by_id[r.snippet_id] = r
    merged = sorted(by_id.values(), key=lambda r: (-r.score, r.snippet_id))
    return merged


def execute_traced(
    sq: StructuredQuery,
    indexes: IndexSet | None,
    cfg: RetrievalConfig,
    intents: IntentPhraseTable,
) -> tuple[list[ScoredResult], StructuredQuery]:
    """Run the federated query; relax stepwise while results are sparse.

    Returns the ranked results and the final (possibly relaxed) query whose
    relaxation_log records every dropped element.
    """
    if indexes is None:
        raise IndexNotBuilt("indexes are not built")
    results = _execute_once(sq, indexes, cfg, intents)
    current = sq
    steps = 0
    while len(results) < cfg.min_results and steps < cfg.max_relax_steps:
        relaxed = relax(current, idf=indexes.idf)
        if relaxed is None:
            break
        current = relaxed
        results = _merge(results, _execute_once(current, indexes, cfg, intents), cfg.limit)
        steps += 1
    return results, current


def execute(
    sq: StructuredQuery,
    indexes: IndexSet | None,
    cfg: RetrievalConfig,
    intents: IntentPhraseTable,
) -> list[ScoredResult]:
    results, _ = execute_traced(sq, indexes, cfg, intents)
    return results


def text_only(
    indexes: IndexSet | None, cfg: RetrievalConfig, terms: list[str], limit: int
) -> list[ScoredResult]:
    """Plain BM25 ranking over all query terms, the baseline engine mode."""
    if indexes is None:
        raise IndexNotBuilt("indexes are not built")
    raw = _bm25_accumulate(indexes, cfg, terms)
    results = [
        ScoredResult(
            snippet_id=sid,
            score=cfg.w_t * score,
            relation_score=0.0,
            concept_score=0.0,
            text_score=score,
            matched_elements=(
                "terms " + " ".join(t for t in terms if _has_term(indexes, t, sid)),
            ),
        )
        for sid, score in raw.items()
        if score > 0.0
    ]
    results.sort(key=lambda r: (-r.score, r.snippet_id))
    return results[:limit]


def explain(result: ScoredResult, cfg: RetrievalConfig) -> str:
    """Human-readable decomposition of one scored result."""
    if result.score <= 0.0:
        raise ValueError("zero-score results are filtered and cannot be explained")
    recomposed = (
        cfg.w_r * result.relation_score
        + cfg.w_c * result.concept_score
        + cfg.w_t * result.text_score
    )
    assert abs(recomposed - result.score) <= 1e-9
    lines = [
        f"{result.snippet_id}: score {result.score:.4f} = "
        f"{cfg.w_r:g}*relation({result.relation_score:.4f}) + "
        f"{cfg.w_c:g}*concept({result.concept_score:.4f}) + "
        f"{cfg.w_t:g}*text({result.text_score:.4f})"
    ]
    lines.extend(f"  {element}" for element in result.matched_elements)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Snapshot format: "FMIX <version>" header, then one JSON record per line,
# sectioned by record kind, everything in canonical sorted order.


def save_indexes(indexes: IndexSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}\n")

        def emit(obj: dict) -> None:
            fh.write(json.dumps(obj, sort_keys=True) + "\n")

        for sid in sorted(indexes.snippets):
            emit(
                {
                    "kind": "doc",
                    "snippet": snippet_to_dict(indexes.snippets[sid]),
                    "len": indexes.doc_len[sid],
                }
            )
        for cid, rel in sorted(indexes.relation, key=lambda k: (k[0], k[1].value)):
            emit(
                {
                    "kind": "relation",
                    "concept": cid,
                    "relation": rel.value,
                    "postings": indexes.relation[(cid, rel)],
                }
            )
        for cid in sorted(indexes.concept):
            emit(
                {
                    "kind": "concept",
                    "concept": cid,
                    "postings": [[sid, fld.value, freq] for sid, fld, freq in indexes.concept[cid]],
                }
            )
        for term in sorted(indexes.text):
            emit(
                {
                    "kind": "text",
                    "term": term,
                    "postings": [[sid, tf] for sid, tf in indexes.text[term]],
                }
            )
        for sid in sorted(indexes.structural):
            emit({"kind": "structural", "snippet_id": sid, "ngrams": sorted(indexes.structural[sid])})


def load_indexes(path: str | Path) -> IndexSet:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != SNAPSHOT_MAGIC:
            raise SnapshotFormatError(f"{path}: not an index snapshot")
        if header[1] != str(SNAPSHOT_VERSION):
            raise SnapshotFormatError(f"{path}: unsupported snapshot version {header[1]}")

        relation: dict[tuple[ConceptId, RelationType], list[str]] = {}
        concept: dict[ConceptId, list[tuple[str, Field, int]]] = {}
        text: dict[str, list[tuple[str, int]]] = {}
        doc_len: dict[str, int] = {}
        snippets: dict[str, Snippet] = {}
        structural: dict[str, frozenset[str]] = {}

        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                kind = obj["kind"]
                if kind == "doc":
                    snippet = snippet_from_dict(obj["snippet"])
                    snippets[snippet.snippet_id] = snippet
                    doc_len[snippet.snippet_id] = obj["len"]
                elif kind == "relation":
                    key = (obj["concept"], RelationType(obj["relation"]))
                    relation[key] = list(obj["postings"])
                elif kind == "concept":
                    concept[obj["concept"]] = [
                        (sid, Field(fld), freq) for sid, fld, freq in obj["postings"]
                    ]
                elif kind == "text":
                    text[obj["term"]] = [(sid, tf) for sid, tf in obj["postings"]]
                elif kind == "structural":
                    structural[obj["snippet_id"]] = frozenset(obj["ngrams"])
                else:
                    raise SnapshotFormatError(f"{path}:{line_no}: unknown record kind {kind!r}")
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                if isinstance(exc, SnapshotFormatError):
                    raise
                raise SnapshotFormatError(f"{path}:{line_no}: bad record: {exc}") from None

    return IndexSet(
        relation=relation,
        concept=concept,
        text=text,
        doc_len=doc_len,
        snippets=snippets,
        structural=structural,
    )
