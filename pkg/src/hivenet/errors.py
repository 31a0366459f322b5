"""Exception hierarchy for topology, radio, traffic, engine and scenario errors."""

from __future__ import annotations


class HivenetError(Exception):
    """Base class for all errors raised by this package."""


# --- topology / graph ---

class DuplicateNodeId(HivenetError):
    pass


class DanglingLinkEndpoint(HivenetError):
    pass


class DisconnectedBackhaul(HivenetError):
    pass


class PositionOutOfArea(HivenetError):
    pass


class NoPath(HivenetError):
    pass


class NoDisjointPaths(HivenetError):
    pass


# --- radio ---

class NonFiniteDistance(HivenetError):
    pass


class ThresholdAboveMaxPower(HivenetError):
    pass


# --- mobility ---

class TimeBeforePlanStart(HivenetError):
    pass


# --- traffic ---

class ZeroRate(HivenetError):
    pass


class EmptyLog(HivenetError):
    pass


# --- engine / data plane ---

class NotInCoverage(HivenetError):
    pass


class UnknownNextHop(HivenetError):
    pass


class NoCoverage(HivenetError):
    pass


# --- control plane ---

class DomainMismatch(HivenetError):
    pass


class NoCandidates(HivenetError):
    pass


class StaleView(HivenetError):
    pass


class BrokenPath(HivenetError):
    pass


class NoCoverageOnEitherNetwork(HivenetError):
    pass


# --- scenario / cli ---

class ScenarioError(HivenetError):
    """Base for scenario-file problems; carries the offending key path."""

    def __init__(self, path: str, message: str = ""):
        self.path = path
        super().__init__(f"{message + ' ' if message else ''}at '{path}'".strip())


class ParseError(ScenarioError):
    """Document is not syntactically valid; path carries the location."""


class UnknownKey(ScenarioError):
    def __init__(self, path: str):
        super().__init__(path, "unknown key")


class MissingField(ScenarioError):
    def __init__(self, path: str):
        super().__init__(path, "missing required field")


class SemanticError(HivenetError):
    pass


class SchemaMismatch(HivenetError):
    pass


class IoFailure(HivenetError):
    pass
