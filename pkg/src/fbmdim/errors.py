class InvalidArguments(ValueError):
    pass


class ResourceLimitError(RuntimeError):
    pass


class UnsupportedSpec(ValueError):
    pass


class SamplingError(RuntimeError):
    pass


class ValidationError(ValueError):
    pass
