"""Error taxonomy, classification and diagnostics for simulator failures."""

import re
from enum import Enum
from dataclasses import dataclass, field


class ErrorType(Enum):
    """Types of simulator errors."""
    CONFIG = "config"
    INVALID_ARGUMENT = "invalid_argument"
    UNBOUNDED_DEPTH = "unbounded_depth"
    CALIBRATION = "calibration"
    INTEGRATION = "integration"
    NO_SECULAR_MOTION = "no_secular_motion"
    OFF_GRID = "off_grid"
    INVALID_ENSEMBLE = "invalid_ensemble"
    FIT = "fit"
    SATURATED_DETECTOR = "saturated_detector"
    UNSORTED_EVENTS = "unsorted_events"
    RUNTIME = "runtime"


class TrapSimError(Exception):
    """Base class for all domain errors raised by the simulator."""

    error_type: ErrorType = ErrorType.RUNTIME

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class ConfigError(TrapSimError):
    """Missing key, unit mismatch or out-of-range value in a run configuration."""
    error_type = ErrorType.CONFIG

    def __init__(self, message: str, key: str | None = None, accepted: str | None = None):
        super().__init__(message, key=key, accepted=accepted)
        self.key = key
        self.accepted = accepted


class InvalidArgumentError(TrapSimError, ValueError):
    """Non-finite or out-of-domain input to a physics operation."""
    error_type = ErrorType.INVALID_ARGUMENT


class UnboundedDepthError(TrapSimError):
    """Pseudopotential keeps rising up to the edge of the search extent."""
    error_type = ErrorType.UNBOUNDED_DEPTH


class CalibrationError(TrapSimError):
    """Calibration targets cannot be met; carries the best report found."""
    error_type = ErrorType.CALIBRATION

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class IntegrationDivergedError(TrapSimError):
    """Trajectory became non-finite; carries the last valid time."""
    error_type = ErrorType.INTEGRATION

    def __init__(self, message: str, last_time: float):
        super().__init__(message, last_time=last_time)
        self.last_time = last_time


class NoSecularMotionError(TrapSimError):
    """No spectral peak above the noise floor."""
    error_type = ErrorType.NO_SECULAR_MOTION


class OffGridError(TrapSimError):
    """Requested value is not a grid point; carries the nearest one."""
    error_type = ErrorType.OFF_GRID

    def __init__(self, message: str, nearest: float):
        super().__init__(message, nearest=nearest)
        self.nearest = nearest


class InvalidEnsembleError(TrapSimError):
    """Ensemble member lost without any tickle applied."""
    error_type = ErrorType.INVALID_ENSEMBLE


class FitError(TrapSimError):
    """Least-squares fit failed; carries the best parameters found."""
    error_type = ErrorType.FIT

    def __init__(self, message: str, best: dict | None = None, converged: bool = False):
        super().__init__(message, best=best or {}, converged=converged)
        self.best = best or {}
        self.converged = converged


class SaturatedDetectorError(TrapSimError):
    """Detection probability of one makes the Poisson inversion diverge."""
    error_type = ErrorType.SATURATED_DETECTOR


class UnsortedEventsError(TrapSimError):
    """Timestamps within a cycle are not non-decreasing."""
    error_type = ErrorType.UNSORTED_EVENTS


@dataclass
class ErrorInfo:
    """Structured error information."""
    error_type: ErrorType
    message: str
    details: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 2 if self.error_type == ErrorType.CONFIG else 1


# Hints for each error type
ERROR_HINTS = {
    ErrorType.CONFIG: "请检查配置键名、单位与取值范围",
    ErrorType.INVALID_ARGUMENT: "输入需为有限值且位于模型有效区域内",
    ErrorType.UNBOUNDED_DEPTH: "谐波模型没有势阱深度，请改用非谐模型或扩大搜索范围",
    ErrorType.CALIBRATION: "目标参数互相矛盾，请放宽偏差上限或调整阱深",
    ErrorType.INTEGRATION: "积分发散，请增加每周期步数",
    ErrorType.NO_SECULAR_MOTION: "轨迹中没有检测到久期运动",
    ErrorType.OFF_GRID: "请使用网格上的相位值",
    ErrorType.INVALID_ENSEMBLE: "初始系综在无激励时不稳定，请缩小初始半径",
    ErrorType.FIT: "拟合失败，请检查数据点数量与取值",
    ErrorType.SATURATED_DETECTOR: "探测概率为 1 时无法反推平均电子数",
    ErrorType.UNSORTED_EVENTS: "每个周期内的时间戳必须非递减",
    ErrorType.RUNTIME: "请检查输入数据与参数",
}


class ErrorClassifier:
    """Classify simulator errors into types and exit codes."""

    # Patterns for classifying messages that crossed a process boundary as text
    _PATTERNS = [
        (r"ConfigError", ErrorType.CONFIG),
        (r"InvalidArgumentError", ErrorType.INVALID_ARGUMENT),
        (r"UnboundedDepthError", ErrorType.UNBOUNDED_DEPTH),
        (r"CalibrationError", ErrorType.CALIBRATION),
        (r"IntegrationDivergedError", ErrorType.INTEGRATION),
        (r"NoSecularMotionError", ErrorType.NO_SECULAR_MOTION),
        (r"OffGridError", ErrorType.OFF_GRID),
        (r"InvalidEnsembleError", ErrorType.INVALID_ENSEMBLE),
        (r"FitError", ErrorType.FIT),
        (r"SaturatedDetectorError", ErrorType.SATURATED_DETECTOR),
        (r"UnsortedEventsError", ErrorType.UNSORTED_EVENTS),
    ]

    @classmethod
    def classify(cls, error: BaseException | str) -> ErrorInfo:
        """
        Classify an exception or error message and extract key information.

        Args:
            error: A raised exception or its "Name: message" rendering.

        Returns:
            ErrorInfo with error type, message, and extracted details.
        """
        if isinstance(error, TrapSimError):
            return ErrorInfo(
                error_type=error.error_type,
                message=str(error),
                details={k: v for k, v in error.details.items() if v is not None},
            )

        if isinstance(error, BaseException):
            error_msg = f"{type(error).__name__}: {error}"
        else:
            error_msg = error

        error_type = ErrorType.RUNTIME
        for pattern, etype in cls._PATTERNS:
            if re.search(pattern, error_msg):
                error_type = etype
                break

        details = {}
        if error_type == ErrorType.CONFIG:
            match = re.search(r"key\s+'([^']+)'", error_msg)
            if match:
                details["key"] = match.group(1)
        elif error_type == ErrorType.INTEGRATION:
            match = re.search(r"t\s*=\s*([0-9.eE+-]+)", error_msg)
            if match:
                details["last_time"] = float(match.group(1))

        return ErrorInfo(error_type=error_type, message=error_msg, details=details)

    @classmethod
    def get_hint(cls, error_info: ErrorInfo) -> str:
        """
        Get a helpful hint for the given error.

        Args:
            error_info: The classified error information.

        Returns:
            A helpful hint string.
        """
        base_hint = ERROR_HINTS.get(error_info.error_type, ERROR_HINTS[ErrorType.RUNTIME])

        if error_info.error_type == ErrorType.CONFIG and "key" in error_info.details:
            base_hint += f" (键: '{error_info.details['key']}')"
        elif error_info.error_type == ErrorType.OFF_GRID and "nearest" in error_info.details:
            base_hint += f" (最近的网格值: {error_info.details['nearest']:.6g})"

        return base_hint


def format_error_context(error: BaseException | str) -> str:
    """
    Render an error as a single-line diagnostic for the command line.

    Args:
        error: The exception (or message) to render.

    Returns:
        One line: error type, message and hint.
    """
    error_info = ErrorClassifier.classify(error)
    hint = ErrorClassifier.get_hint(error_info)
    message = " ".join(error_info.message.split())
    return f"error[{error_info.error_type.value}]: {message} | {hint}"
