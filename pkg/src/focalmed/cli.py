"""Operator CLI: the explicit pipeline ingest -> tag -> index -> serve.

Each stage persists its artifact under the data directory (kg.jsonl,
tagged.jsonl, index.fmix) so every stage can be inspected and re-run on
its own. Exit codes: 0 ok, 1 usage, 2 data error, 3 runtime error.
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import click

from .config import AppConfig, load_config, split_addr
from .engine import MODE_FULL, MODE_TEXT, MODES, SearchEngine
from .errors import DataError, EmptyQuery, FocalmedError
from .evaluation import evaluate, load_gold_set, load_test
from .kg import load_kg
from .lexicon import build_lexicon
from .retrieval import build_indexes, load_indexes, save_indexes
from .tagger import (
    coverage,
    field_tag_counts,
    load_corpus,
    load_manual_tags,
    load_tagged_corpus,
    save_tagged_corpus,
    tag_corpus,
    tagging_precision,
)


class Output:
    def __init__(self, fmt: str):
        self.lines = fmt == "lines"

    def emit(self, record: dict, human: str) -> None:
        if self.lines:
            click.echo(json.dumps(record, sort_keys=True))
        else:
            click.echo(human)


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise DataError(f"{path} is missing; run `focalmed {hint}` first")
    return path


def _load_engine(cfg: AppConfig) -> SearchEngine:
    graph = load_kg(_require(cfg.kg_path, "ingest-kg"))
    indexes = load_indexes(_require(cfg.index_path, "build-index"))
    return SearchEngine(
        graph,
        indexes,
        cfg=cfg.retrieval,
        intents=cfg.intents,
        cohort_keywords=cfg.cohort_keywords,
        expand_depth=cfg.expand_depth,
    )


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--data-dir", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["human", "lines"]), default="human")
@click.pass_context
def cli(ctx, config_path, data_dir, fmt):
    """Focused clinical snippet search over a medical knowledge graph."""
    cfg = load_config(config_path)
    if data_dir is not None:
        cfg.data_dir = Path(data_dir)
    ctx.obj = (cfg, Output(fmt))


@cli.command("ingest-kg")
@click.option("--kg", "kg_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def ingest_kg(obj, kg_path):
    """Validate a knowledge-graph file and install it in the data dir."""
    cfg, out = obj
    graph = load_kg(kg_path)
    cfg.data_dir.mkdir(parents=True, exist_ok=True)
    if Path(kg_path).resolve() != cfg.kg_path.resolve():
        shutil.copyfile(kg_path, cfg.kg_path)
    out.emit(
        {"concepts": graph.concept_count, "relations": graph.relation_count},
        f"ingested {graph.concept_count} concepts, {graph.relation_count} relations "
        f"-> {cfg.kg_path}",
    )


@cli.command("tag-corpus")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def tag_corpus_cmd(obj, corpus_path):
    """Tag a snippet corpus with concepts and relations."""
    cfg, out = obj
    graph = load_kg(_require(cfg.kg_path, "ingest-kg"))
    lexicon = build_lexicon(graph)
    tagged = tag_corpus(load_corpus(corpus_path), graph, lexicon, cfg.intents)
    cfg.data_dir.mkdir(parents=True, exist_ok=True)
    save_tagged_corpus(tagged, cfg.tagged_path)
    counts = {f.value: n for f, n in field_tag_counts(tagged).items()}
    relation_count = sum(len(ts.relation_tags) for ts in tagged)
    out.emit(
        {"snippets": len(tagged), "concept_tags": counts, "relation_tags": relation_count},
        f"tagged {len(tagged)} snippets -> {cfg.tagged_path}\n"
        f"concept tags per field: {counts}\nrelation tags: {relation_count}",
    )


@cli.command("build-index")
@click.pass_obj
def build_index(obj):
    """Build relation/concept/text indexes from the tagged corpus."""
    cfg, out = obj
    tagged = load_tagged_corpus(_require(cfg.tagged_path, "tag-corpus"))
    indexes = build_indexes(tagged)
    save_indexes(indexes, cfg.index_path)
    out.emit(
        {
            "snippets": indexes.n_docs,
            "relation_keys": len(indexes.relation),
            "concepts": len(indexes.concept),
            "terms": len(indexes.text),
        },
        f"indexed {indexes.n_docs} snippets -> {cfg.index_path} "
        f"({len(indexes.relation)} relation keys, {len(indexes.concept)} concepts, "
        f"{len(indexes.text)} terms)",
    )


@cli.command("search")
@click.argument("query")
@click.option("--mode", type=click.Choice(list(MODES)), default=MODE_FULL)
@click.option("--limit", type=click.IntRange(min=1), default=None)
@click.pass_obj
def search(obj, query, mode, limit):
    """Run one query and print the ranked snippets with explanations."""
    cfg, out = obj
    engine = _load_engine(cfg)
    outcome = engine.search(query, mode=mode, limit=limit)
    for rank, result in enumerate(outcome.results, start=1):
        snippet = engine.indexes.snippets[result.snippet_id]
        trail = " > ".join([snippet.doc_title, *snippet.section_path])
        out.emit(
            {
                "rank": rank,
                "snippet_id": result.snippet_id,
                "score": result.score,
                "doc_title": snippet.doc_title,
                "section_path": list(snippet.section_path),
                "explanation": list(result.matched_elements),
            },
            f"{rank}. {result.snippet_id}  {result.score:.4f}  {trail}\n"
            + "\n".join(f"     {e}" for e in result.matched_elements),
        )
    if not outcome.results:
        out.emit({"results": 0}, "no results")
    if outcome.parsed is not None:
        sq = outcome.parsed
        out.emit(
            {
                "parsed": {
                    "concepts": [
                        {"concept_id": c.concept_id, "origin": c.origin.value, "weight": c.weight}
                        for c in sq.concepts
                    ],
                    "relation_intents": [r.value for r in sq.relation_intents],
                    "cohorts": sq.cohorts,
                    "residual_terms": sq.residual_terms,
                    "relaxation_log": sq.relaxation_log,
                }
            },
            "parsed: concepts="
            + ",".join(f"{c.concept_id}({c.origin.value})" for c in sq.concepts)
            + " intents="
            + ",".join(r.value for r in sq.relation_intents)
            + (" dropped=" + "; ".join(sq.relaxation_log) if sq.relaxation_log else ""),
        )


@cli.command("eval")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def eval_cmd(obj, gold_path):
    """nDCG@10 of the structured engine against the text baseline."""
    cfg, out = obj
    engine = _load_engine(cfg)
    gold = load_gold_set(gold_path)
    mean_full, per_full = evaluate(engine, gold, MODE_FULL)
    mean_text, per_text = evaluate(engine, gold, MODE_TEXT)
    for query in gold.queries:
        out.emit(
            {"query": query, "ndcg_full": per_full[query], "ndcg_text": per_text[query]},
            f"{per_full[query]:.4f}  {per_text[query]:.4f}  {query}",
        )
    out.emit(
        {"mean_full": mean_full, "mean_text": mean_text, "queries": len(gold)},
        f"mean nDCG@10: full={mean_full:.4f} text={mean_text:.4f} over {len(gold)} queries",
    )


@cli.command("coverage")
@click.option("--manual", "manual_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
def coverage_cmd(obj, manual_path):
    """Recall of manual relation tags per document, plus the median."""
    cfg, out = obj
    tagged = load_tagged_corpus(_require(cfg.tagged_path, "tag-corpus"))
    manual = load_manual_tags(manual_path)
    per_doc, med = coverage(tagged, manual)
    precision = tagging_precision(tagged, manual)
    for doc_id in sorted(per_doc):
        out.emit(
            {"doc_id": doc_id, "coverage": per_doc[doc_id]},
            f"{doc_id}  coverage={per_doc[doc_id]:.4f}",
        )
    out.emit(
        {"median": med, "docs": len(per_doc)},
        f"median coverage: {med:.4f} over {len(per_doc)} docs",
    )
    mean_precision = sum(precision.values()) / len(precision) if precision else 0.0
    out.emit(
        {"mean_precision": mean_precision},
        f"informational mean precision: {mean_precision:.4f}",
    )


@cli.command("bench")
@click.option("--rpm", type=click.IntRange(min=1), required=True)
@click.option("--duration", type=click.IntRange(min=1), required=True, help="seconds")
@click.option("--mode", type=click.Choice(list(MODES)), default=MODE_FULL)
@click.option("--raw-log", type=click.Path(dir_okay=False), default=None)
@click.option("--queries", "queries_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="text file with one query per line; defaults to gold-set style pool")
@click.pass_obj
def bench(obj, rpm, duration, mode, raw_log, queries_path):
    """Open-loop load test against the in-process engine."""
    cfg, out = obj
    engine = _load_engine(cfg)
    if queries_path is not None:
        pool = [line.strip() for line in Path(queries_path).read_text().splitlines() if line.strip()]
    else:
        # Default pool: one query per relation-index key on this corpus.
        pool = sorted(
            f"{engine.graph.concepts[cid].preferred_label} {rel.value.replace('HAS_', '').replace('_', ' ').lower()}"
            for cid, rel in engine.indexes.relation
            if cid in engine.graph.concepts
        )
    if not pool:
        raise DataError("no queries available for the load test")
    report = load_test(
        lambda q: engine.search(q, mode=mode), rpm, duration, pool, raw_log=raw_log
    )
    out.emit(
        {
            "target_rpm": report.target_rpm,
            "achieved_rpm": report.achieved_rpm,
            "p50_ms": report.p50,
            "p95_ms": report.p95,
            "p99_ms": report.p99,
            "errors": report.error_count,
            "samples": report.sample_count,
        },
        f"target {report.target_rpm} rpm, achieved {report.achieved_rpm:.1f} rpm, "
        f"{report.sample_count} samples\n"
        f"p50={report.p50:.2f}ms p95={report.p95:.2f}ms p99={report.p99:.2f}ms "
        f"errors={report.error_count}",
    )


@cli.command("serve")
@click.option("--addr", default=None, help="host:port; default from config/env")
@click.pass_obj
def serve(obj, addr):
    """Serve the HTTP API over the ingested graph and built indexes."""
    import uvicorn

    from .service import create_app

    cfg, _ = obj
    engine = _load_engine(cfg)
    host, port = split_addr(addr or cfg.addr)
    uvicorn.run(create_app(engine), host=host, port=port, log_level="warning")


def main(argv=None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except EmptyQuery as exc:
        click.echo(f"usage error: {exc}", err=True)
        sys.exit(1)
    except (DataError, FileNotFoundError) as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(2)
    except FocalmedError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
