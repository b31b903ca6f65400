"""Ranking quality (nDCG@10) and latency measurement under load.

Load generation is open-loop: requests are fired on a fixed schedule no
matter how slowly earlier ones return, so a slow engine cannot throttle
the offered rate. Percentiles use the nearest-rank method so they exactly
match a sort-based recomputation of the raw sample log.
"""

from __future__ import annotations

import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .errors import (
    EmptyGoldSet,
    EngineUnavailable,
    FocalmedError,
    MalformedRecord,
    NoRelevantJudgments,
)

GRADE_MIN, GRADE_MAX = 0, 3


@dataclass(frozen=True)
class Judgment:
    query: str
    snippet_id: str
    grade: int


@dataclass
class GoldSet:
    judgments_by_query: dict[str, list[Judgment]]

    @property
    def queries(self) -> list[str]:
        return list(self.judgments_by_query)

    def __len__(self) -> int:
        return len(self.judgments_by_query)


def load_gold_set(path: str | Path) -> GoldSet:
    """Line-delimited {query, snippet_id, grade}; every query needs some
    judgment with grade above zero."""
    by_query: dict[str, list[Judgment]] = {}
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                judgment = Judgment(obj["query"], obj["snippet_id"], int(obj["grade"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MalformedRecord(line_no, f"bad judgment record: {exc}") from None
            if not (GRADE_MIN <= judgment.grade <= GRADE_MAX):
                raise MalformedRecord(line_no, f"grade {judgment.grade} outside 0..3")
            key = (judgment.query, judgment.snippet_id)
            if key in seen:
                raise MalformedRecord(line_no, f"duplicate judgment for {key}")
            seen.add(key)
            by_query.setdefault(judgment.query, []).append(judgment)
    for query, judgments in by_query.items():
        if not any(j.grade > 0 for j in judgments):
            raise NoRelevantJudgments(f"query {query!r} has no relevant judgment")
    return GoldSet(judgments_by_query=by_query)


def ndcg_at_k(ranking: list[str], judgments: list[Judgment], k: int = 10) -> float:
    """Graded nDCG with gain 2^grade - 1 and log2(rank+1) discount.

    Snippets missing from the judgments count as grade 0; the ideal ranking
    comes from the judgments sorted by grade, truncated at k.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    grades = {j.snippet_id: j.grade for j in judgments}
    if not any(g > 0 for g in grades.values()):
        raise NoRelevantJudgments("judgments contain no grade above zero")
    dcg = 0.0
    for i, sid in enumerate(ranking[:k], start=1):
        dcg += (2 ** grades.get(sid, 0) - 1) / math.log2(i + 1)
    idcg = 0.0
    for i, grade in enumerate(sorted(grades.values(), reverse=True)[:k], start=1):
        idcg += (2**grade - 1) / math.log2(i + 1)
    return dcg / idcg


def evaluate(engine, gold: GoldSet, mode: str, k: int = 10) -> tuple[float, dict[str, float]]:
    """Mean and per-query nDCG@k of one engine mode over the gold set."""
    if len(gold) == 0:
        raise EmptyGoldSet("gold set has no queries")
    per_query: dict[str, float] = {}
    for query, judgments in gold.judgments_by_query.items():
        try:
            outcome = engine.search(query, mode=mode, limit=k)
        except Exception as exc:
            raise FocalmedError(f"evaluation aborted on query {query!r}: {exc}") from exc
        ranking = [r.snippet_id for r in outcome.results]
        per_query[query] = ndcg_at_k(ranking, judgments, k)
    mean = sum(per_query.values()) / len(per_query)
    return mean, per_query


@dataclass
class LatencyReport:
    target_rpm: int
    achieved_rpm: float
    p50: float
    p95: float
    p99: float
    error_count: int
    sample_count: int


def nearest_rank(sorted_values: list[float], percentile: float) -> float:
    """Nearest-rank percentile of an ascending-sorted, non-empty list."""
    rank = math.ceil(percentile / 100.0 * len(sorted_values))
    return sorted_values[max(rank, 1) - 1]


def load_test(
    engine_fn: Callable[[str], object],
    rpm: int,
    duration: float,
    query_pool: list[str],
    raw_log: str | Path | None = None,
    max_workers: int = 64,
) -> LatencyReport:
    """Drive ``engine_fn`` at a fixed request rate and report percentiles.

    ``engine_fn`` takes a query string; any exception it raises counts as an
    errored request. Requests round-robin over the pool. When ``raw_log`` is
    given, one sample per line is persisted before aggregation.
    """
    if rpm < 1:
        raise ValueError("rpm must be at least 1")
    if duration < 1:
        raise ValueError("duration must be at least 1 second")
    if not query_pool:
        raise ValueError("query pool must be non-empty")

    try:
        engine_fn(query_pool[0])
    except Exception as exc:
        raise EngineUnavailable(f"probe request failed: {exc}") from exc

    total = round(rpm * duration / 60.0)
    interval = 60.0 / rpm
    samples: list[tuple[str, float, float, str]] = []
    lock = threading.Lock()

    def run_one(query: str) -> None:
        started_at = time.time()
        t0 = time.perf_counter()
        status = "ok"
        try:
            engine_fn(query)
        except Exception:
            status = "error"
        millis = (time.perf_counter() - t0) * 1000.0
        with lock:
            samples.append((query, started_at, millis, status))

    t_start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for i in range(total):
            target = t_start + i * interval
            delay = target - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
            pool.submit(run_one, query_pool[i % len(query_pool)])
    elapsed = time.perf_counter() - t_start

    if raw_log is not None:
        with open(raw_log, "w", encoding="utf-8") as fh:
            for query, started_at, millis, status in samples:
                fh.write(
                    json.dumps(
                        {"query": query, "start": started_at, "millis": millis, "status": status}
                    )
                    + "\n"
                )

    latencies = sorted(ms for _, _, ms, _ in samples)
    return LatencyReport(
        target_rpm=rpm,
        achieved_rpm=len(samples) / (elapsed / 60.0),
        p50=nearest_rank(latencies, 50),
        p95=nearest_rank(latencies, 95),
        p99=nearest_rank(latencies, 99),
        error_count=sum(1 for _, _, _, status in samples if status != "ok"),
        sample_count=len(samples),
    )
