"""Exception hierarchy shared across the package.

DataError subclasses signal malformed or inconsistent input files and map to
CLI exit code 2; everything else under FocalmedError maps to exit code 3.
"""


class FocalmedError(Exception):
    """Base class for all package errors."""


class DataError(FocalmedError):
    """Invalid or inconsistent input data (files, records, references)."""


class MalformedRecord(DataError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateConcept(DataError):
    def __init__(self, concept_id: str):
        super().__init__(f"duplicate concept id {concept_id!r}")
        self.concept_id = concept_id


class DanglingRelation(DataError):
    def __init__(self, concept_id: str):
        super().__init__(f"relation endpoint {concept_id!r} is not a known concept")
        self.concept_id = concept_id


class HierarchyCycle(DataError):
    def __init__(self, cycle: list[str]):
        super().__init__("hierarchy cycle: " + " -> ".join(cycle))
        self.cycle = cycle


class UnknownConcept(FocalmedError):
    def __init__(self, concept_id: str):
        super().__init__(f"unknown concept {concept_id!r}")
        self.concept_id = concept_id


class EmptyQuery(FocalmedError):
    """Nothing remains of the query after normalization."""


class DuplicateSnippetId(DataError):
    def __init__(self, snippet_id: str):
        super().__init__(f"duplicate snippet id {snippet_id!r}")
        self.snippet_id = snippet_id


class UnknownDocId(DataError):
    def __init__(self, doc_id: str):
        super().__init__(f"manual tags reference unknown doc id {doc_id!r}")
        self.doc_id = doc_id


class NoJudgedDocs(DataError):
    """No document carries a manual tag, so coverage is undefined."""


class NoRelevantJudgments(DataError):
    """A query's judgments contain no grade above zero."""


class EmptyGoldSet(DataError):
    """The gold set contains no queries."""


class IndexNotBuilt(FocalmedError):
    """Query execution was attempted before indexes were built or loaded."""


class SnapshotFormatError(DataError):
    """An index snapshot file is corrupt or has an unsupported version."""


class EngineUnavailable(FocalmedError):
    """The engine under load test cannot serve requests."""
