"""Exception types shared by the simulator modules."""


class SimulationError(Exception):
    pass


class ConfigError(SimulationError, ValueError):
    """Invalid configuration or argument."""


class StateError(SimulationError, RuntimeError):
    """Operation not valid in the current state (empty graph, unplaced object...)."""


class CapacityError(SimulationError):
    """An object does not fit where it was asked to go."""


class UnknownObjectError(SimulationError, LookupError):
    pass
