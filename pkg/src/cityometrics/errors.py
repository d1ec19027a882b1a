"""Exception hierarchy shared by all stages."""

from __future__ import annotations


class CityometricsError(Exception):
    """Base class. ``code`` is the machine-readable name used in CLI error JSON."""

    code = "error"

    def __init__(self, message: str, details: list | None = None):
        super().__init__(message)
        self.details = list(details or [])


# ingestion / parsing
class ParseFailure(CityometricsError):
    code = "parse_failure"


class MalformedLine(CityometricsError):
    code = "malformed_line"


class DuplicateId(CityometricsError):
    code = "duplicate_id"


# registries
class SchemaError(CityometricsError):
    code = "schema_error"


class DanglingReference(CityometricsError):
    code = "dangling_reference"


class DuplicateKey(CityometricsError):
    code = "duplicate_key"


# delineation
class EmptyTier(CityometricsError):
    code = "empty_tier"


class MissingPopulation(CityometricsError):
    code = "missing_population"


class GazetteerMismatch(CityometricsError):
    code = "gazetteer_mismatch"


# counting / collab / report
class UnresolvedAffiliations(CityometricsError):
    code = "unresolved_affiliations"


class PartitionMismatch(CityometricsError):
    code = "partition_mismatch"


class UnknownInstitution(CityometricsError):
    code = "unknown_institution"


class UnknownMetro(CityometricsError):
    code = "unknown_metro"


class ReportMismatch(CityometricsError):
    code = "report_mismatch"


class EmptyCorpus(CityometricsError):
    code = "empty_corpus"


class ConfigError(CityometricsError):
    code = "config_error"
