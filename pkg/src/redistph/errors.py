"""Exception hierarchy shared by all modules."""


class RedistError(Exception):
    """Base class for every error raised by this package."""


# graph / plan validation
class GraphError(RedistError):
    pass


class DuplicateNode(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class UnknownEdgeEndpoint(GraphError):
    pass


class Disconnected(GraphError):
    pass


class NegativeAttribute(GraphError):
    pass


class PlanError(RedistError):
    pass


class MissingNode(PlanError):
    pass


class DistrictDisconnected(PlanError):
    def __init__(self, district: int):
        super().__init__(f"district {district} is not connected")
        self.district = district


class PopulationImbalance(PlanError):
    def __init__(self, district: int, share: float):
        super().__init__(f"district {district} has {share:.4f} of ideal population")
        self.district = district
        self.share = share


class ZeroTurnoutDistrict(RedistError):
    def __init__(self, district: int):
        super().__init__(f"district {district} has no two-party votes")
        self.district = district


class TooLarge(RedistError):
    pass


# chains
class ConfigError(RedistError):
    pass


class DisconnectedSubset(RedistError):
    pass


class StepExhausted(RedistError):
    pass


class NoValidFlip(RedistError):
    pass


# persistence
class MissingFiltration(RedistError):
    pass


class FiltrationRangeError(RedistError):
    pass


# metrics
class InfiniteDeath(RedistError):
    pass


# analysis / stability
class ModeUnavailable(RedistError):
    pass


class AnchorNotPartyWon(RedistError):
    pass


class NotOneWay(RedistError):
    pass


class NotGraphPreserving(RedistError):
    pass
