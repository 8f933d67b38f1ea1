from __future__ import annotations


class IotIdError(Exception):
    exit_code = 3


class UsageError(IotIdError):
    exit_code = 1


class DataError(IotIdError):
    exit_code = 2


class ConfigValidationError(UsageError):
    pass


class SchemaMismatchError(UsageError):
    pass


class PcapFormatError(DataError):
    pass


class ManifestError(DataError):
    pass


class ScenarioError(DataError):
    pass


class TrainingError(DataError):
    pass


class ModelFormatError(DataError):
    pass


class ExperimentError(DataError):
    pass
