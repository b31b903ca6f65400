"""Read-only HTTP API over a loaded engine.

All state is immutable after startup, so request handling is freely
concurrent; replaying a request returns an identical body except took_ms.
Error bodies always carry {code, message} from a closed code set:
EMPTY_QUERY, BAD_LIMIT, BAD_MODE, UNKNOWN_CONCEPT, INDEX_NOT_LOADED.
"""

from __future__ import annotations

import time

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .engine import MODES, SearchEngine, render_result, render_structured_query
from .errors import EmptyQuery, IndexNotBuilt, UnknownConcept

MAX_LIMIT = 100


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(engine: SearchEngine | None = None) -> FastAPI:
    app = FastAPI(title="focalmed", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET"], allow_headers=["*"]
    )
    app.state.engine = engine

    def current_engine() -> SearchEngine | None:
        return app.state.engine

    @app.get("/v1/health")
    def health():
        eng = current_engine()
        graph_loaded = eng is not None
        index_loaded = eng is not None and eng.indexes is not None
        return {
            "status": "ok" if index_loaded else "starting",
            "graph_loaded": graph_loaded,
            "index_loaded": index_loaded,
            "corpus_size": eng.corpus_size if eng is not None else 0,
        }

    @app.get("/v1/parse")
    def parse_endpoint(q: str = ""):
        eng = current_engine()
        if eng is None:
            return _error(503, "INDEX_NOT_LOADED", "engine is still loading")
        try:
            sq = eng.parse_query(q)
        except EmptyQuery:
            return _error(400, "EMPTY_QUERY", "query is empty after normalization")
        return render_structured_query(sq, eng.graph)

    @app.get("/v1/search")
    def search_endpoint(q: str = "", limit: str | None = None, mode: str = "full"):
        eng = current_engine()
        if eng is None or eng.indexes is None:
            return _error(503, "INDEX_NOT_LOADED", "indexes are not loaded yet")
        if mode not in MODES:
            return _error(400, "BAD_MODE", f"mode must be one of {', '.join(MODES)}")
        if limit is None:
            parsed_limit = eng.cfg.limit
        else:
            try:
                parsed_limit = int(limit)
            except ValueError:
                return _error(400, "BAD_LIMIT", "limit must be an integer")
            if not 1 <= parsed_limit <= MAX_LIMIT:
                return _error(400, "BAD_LIMIT", f"limit must be within 1..{MAX_LIMIT}")
        t0 = time.perf_counter()
        try:
            outcome = eng.search(q, mode=mode, limit=parsed_limit)
            parsed = outcome.parsed if outcome.parsed is not None else eng.parse_query(q)
        except EmptyQuery:
            return _error(400, "EMPTY_QUERY", "query is empty after normalization")
        except IndexNotBuilt:
            return _error(503, "INDEX_NOT_LOADED", "indexes are not loaded yet")
        took_ms = int((time.perf_counter() - t0) * 1000)
        return {
            "query": q,
            "mode": mode,
            "parsed": render_structured_query(parsed, eng.graph),
            "results": [render_result(r, eng, outcome.parsed, q) for r in outcome.results],
            "took_ms": took_ms,
        }

    @app.get("/v1/concepts/{concept_id}")
    def concept_endpoint(concept_id: str):
        eng = current_engine()
        if eng is None:
            return _error(503, "INDEX_NOT_LOADED", "engine is still loading")
        try:
            concept = eng.graph.concept(concept_id)
        except UnknownConcept:
            return _error(404, "UNKNOWN_CONCEPT", f"no concept with id {concept_id!r}")
        relations = [
            {
                "predicate": r.predicate.value,
                "object": r.object,
                "object_label": eng.graph.concepts[r.object].preferred_label,
            }
            for r in eng.graph.outgoing(concept_id)
        ]
        return {
            "id": concept.id,
            "preferred_label": concept.preferred_label,
            "synonyms": list(concept.synonyms),
            "semantic_type": concept.semantic_type.value,
            "relations": relations,
        }

    return app
