import typing as T
from dataclasses import dataclass
from functools import wraps


class OmramseyException(Exception):
    pass


class DomainError(OmramseyException):
    pass


class ParameterError(OmramseyException):
    pass


class ScheduleError(ParameterError):
    pass


class NumericalError(OmramseyException):
    pass


class FitError(OmramseyException):
    pass


class SchemaError(OmramseyException):
    pass


class ArtifactError(OmramseyException):
    pass


@dataclass(frozen=True)
class ScenarioIssue:
    path: str
    line: T.Optional[int]
    message: str

    def __str__(self) -> str:
        where = f"{self.path} (line {self.line})" if self.line else self.path
        return f"{where}: {self.message}"


class ScenarioError(OmramseyException):
    issues: T.Tuple[ScenarioIssue, ...]

    def __init__(self, message: str, issues: T.Iterable[ScenarioIssue] = ()):
        self.issues = tuple(issues)
        if self.issues:
            message = message + "\n" + "\n".join(f"  {i}" for i in self.issues)
        super().__init__(message)


def map_exceptions(
    exceptions: dict[T.Union[type[Exception], T.Callable[..., bool]], type[Exception]]
):
    def _wrapper(f):
        @wraps(f)
        def _map_exceptions(*args, **kwargs):
            try:
                return f(*args, **kwargs)
            except OmramseyException:
                raise
            except Exception as e:
                for source_type in exceptions:
                    if isinstance(source_type, type):
                        if isinstance(e, source_type):
                            target_class = exceptions[source_type]
                            raise target_class(str(e)) from e
                    else:
                        target_class = exceptions[source_type]
                        if source_type(e):
                            raise target_class(str(e)) from e

                raise

        return _map_exceptions

    return _wrapper


def collect_violations(checks: T.Iterable[T.Tuple[bool, str]]) -> list[str]:
    """Return the message of every check whose condition is false."""
    return [message for ok, message in checks if not ok]
