from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from app.schemas.lti import SprCertificate


class ConfigurationError(ValueError):
    """Bad input: the run cannot start. Maps to CLI exit status 1."""


class RunError(Exception):
    """Failure after a valid configuration was accepted. Maps to exit status 2."""


class ImproperSystemError(ConfigurationError):
    pass


class DimensionMismatchError(ConfigurationError):
    pass


class SingularSystemError(ConfigurationError):
    pass


class ControllerKindError(ConfigurationError):
    pass


class AgentParamsError(ConfigurationError):
    pass


class ReferenceScheduleError(ConfigurationError):
    pass


class InfeasibleReferenceError(ConfigurationError):
    pass


class ShareRangeError(ConfigurationError):
    pass


class KhBoundError(ConfigurationError):
    def __init__(self, kh: float, required: float):
        super().__init__(f"kh={kh:g} is below the required bound {required:g}")
        self.kh = kh
        self.required = required


class UnknownPresetError(ConfigurationError):
    pass


class NonSprPlantError(ConfigurationError):
    def __init__(self, certificate: SprCertificate):
        super().__init__(
            f"plant is not strictly positive real: verdict={certificate.verdict.value}"
            + (f" ({certificate.reason})" if certificate.reason else "")
        )
        self.certificate = certificate


class AnalysisError(RunError):
    pass


class OutputWriteError(RunError):
    def __init__(self, path: str, detail: str):
        super().__init__(f"{path}: {detail}")
        self.path = path
