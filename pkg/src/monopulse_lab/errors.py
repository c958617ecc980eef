"""Exception hierarchy shared by all modules."""


class MonopulseLabError(Exception):
    """Base class for every error raised by the package."""


class PoleAtFrequency(MonopulseLabError):
    def __init__(self, message, index=None):
        super().__init__(message if index is None else f"{message} (frequency index {index})")
        self.index = index


class DegenerateNetwork(MonopulseLabError):
    pass


class GridMismatch(MonopulseLabError):
    pass


class PortOutOfRange(MonopulseLabError):
    pass


class SingularJunction(MonopulseLabError):
    def __init__(self, message, index=None, frequency=None):
        super().__init__(message)
        self.index = index
        self.frequency = frequency


class NetlistError(MonopulseLabError):
    """Raised when a netlist cannot be turned into a valid graph.

    The individual problems are kept in ``diagnostics``.
    """

    def __init__(self, diagnostics, source=None):
        self.diagnostics = list(diagnostics)
        self.source = source
        head = "; ".join(str(d) for d in self.diagnostics[:3])
        if len(self.diagnostics) > 3:
            head += f"; ... ({len(self.diagnostics)} total)"
        prefix = f"{source}: " if source else ""
        super().__init__(prefix + head)


class NoSolutionFound(MonopulseLabError):
    pass


class FrequencyNotInGrid(MonopulseLabError):
    pass


class NoMainLobe(MonopulseLabError):
    pass


class SumNull(MonopulseLabError):
    pass


class OutOfUnambiguousRange(MonopulseLabError):
    pass


class EmptyBatch(MonopulseLabError):
    pass


class UnsupportedPortCount(MonopulseLabError):
    pass


class ConfigError(MonopulseLabError):
    pass
