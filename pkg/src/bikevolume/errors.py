"""Exception hierarchy shared across the engine.

The CLI maps each class onto a process exit code, so new failure kinds
should subclass one of these rather than ``Exception`` directly.
"""


class BikeVolumeError(Exception):
    """Base class. ``exit_code`` is what the CLI returns."""

    exit_code = 4
    code = "runtime_error"

    def __init__(self, message, *, code=None, **context):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.context = context

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        out.update({k: v for k, v in self.context.items() if v is not None})
        return out


class ConfigError(BikeVolumeError):
    exit_code = 2
    code = "config_error"


class DataError(BikeVolumeError):
    exit_code = 3
    code = "data_error"

