"""Exception hierarchy. Everything raised on bad domain input derives from
:class:`PromiseAttentionError` so the CLI can map it to exit code 1."""


class PromiseAttentionError(Exception):
    pass


class BindingError(PromiseAttentionError):
    """Promise endpoints do not face each other."""


class PolarityError(PromiseAttentionError):
    pass


class IncompleteChainError(PromiseAttentionError):
    pass


class DimensionError(PromiseAttentionError, ValueError):
    pass


class DomainError(PromiseAttentionError, ValueError):
    """Argument outside the operation's domain (negative weight, c not in (0,1), ...)."""


class GraphError(PromiseAttentionError):
    pass


class UndefinedResult(PromiseAttentionError):
    """No data available to compute the requested statistic."""


class StoreError(PromiseAttentionError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
