"""Error types raised across the engine.

Every error carries a stable machine-readable code (the class name); the CLI
prints it on stderr and the REST layer maps it onto HTTP error payloads.
"""


class CkgError(Exception):
    """Base class for all engine errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# corpus
class MalformedRecord(CkgError):
    pass


class NestingTooDeep(CkgError):
    pass


class EmptyCorpus(CkgError):
    pass


# index
class DuplicateDocId(CkgError):
    pass


class UnknownDoc(CkgError):
    pass


class EmptyQuery(CkgError):
    pass


class NoMatchInField(CkgError):
    pass


class IndexMissing(CkgError):
    pass


class IndexFormatError(CkgError):
    pass


# embed
class DimensionMismatch(CkgError):
    pass


class ZeroVector(CkgError):
    pass


# cluster
class ZeroCentroid(CkgError):
    pass


class InsufficientNegatives(CkgError):
    pass


class Diverged(CkgError):
    pass


class UnknownCluster(CkgError):
    pass


# kg
class MultipleRoots(CkgError):
    pass


class DuplicateSiblingLabel(CkgError):
    pass


class CycleDetected(CkgError):
    pass


class NotALeaf(CkgError):
    pass


class AlreadyAttached(CkgError):
    pass


class NotPending(CkgError):
    pass


class UnknownItem(CkgError):
    pass


class UnknownNode(CkgError):
    pass


class CorruptFile(CkgError):
    pass


class SchemaVersionMismatch(CkgError):
    pass


# tablesearch
class EmptyCluster(CkgError):
    pass


class UnknownBar(CkgError):
    pass


class EmptySelection(CkgError):
    pass


# convo / llm
class AuthError(CkgError):
    pass


class Timeout(CkgError):
    pass


class MalformedResponse(CkgError):
    pass


class LlmUnavailable(CkgError):
    pass


# service
class ConfigError(CkgError):
    pass
