"""
Exception hierarchy for weighted-graph analysis.

Every error raised by the analysis modules derives from GraphAnalysisError,
and additionally from the closest builtin family (ValueError, RuntimeError,
OSError) so callers can catch either.
"""

from typing import Optional


class GraphAnalysisError(Exception):
    """Base class for all graph analysis errors."""


# Graph construction

class NonPositiveWeight(GraphAnalysisError, ValueError):
    """An edge weight is zero, negative or not finite."""


class NonPositiveMeasure(GraphAnalysisError, ValueError):
    """A node measure is zero, negative or not finite."""


class SelfLoopEdge(GraphAnalysisError, ValueError):
    """An explicit (i, i) edge was supplied."""


class DuplicateEdge(GraphAnalysisError, ValueError):
    """The same undirected edge was supplied twice."""


class IndexOutOfRange(GraphAnalysisError, IndexError):
    """A node index is outside 0..n-1."""


class IsolatedNode(GraphAnalysisError, ValueError):
    """A random-walk preset was requested for a node with no neighbours."""


class AsymmetricScores(GraphAnalysisError, ValueError):
    """Attention scores or the neighbour mask are not symmetric."""


class AsymmetricSupport(GraphAnalysisError, ValueError):
    """P_ij > 0 but P_ji == 0 for some pair."""


class NotRowStochastic(GraphAnalysisError, ValueError):
    """A transition matrix has negative entries or rows not summing to 1."""


class NotReversible(GraphAnalysisError, ValueError):
    """Detailed balance fails on a non-tree edge."""


# Calculus and spectra

class DimensionMismatch(GraphAnalysisError, ValueError):
    """Array shapes do not agree with the graph or with each other."""


class NonFiniteValues(GraphAnalysisError, ValueError):
    """A node function holds NaN or infinite entries."""


class InvalidP(GraphAnalysisError, ValueError):
    """Gradient p-norm requested with p < 1 or a non-finite p."""


class NegativeOrder(GraphAnalysisError, ValueError):
    """Derivative order m < 0."""


class NumericalFailure(GraphAnalysisError, RuntimeError):
    """The eigensolver did not converge."""


class DisconnectedGraph(GraphAnalysisError, ValueError):
    """An operation that needs a spectral gap was given a disconnected graph."""


class PreconditionViolated(GraphAnalysisError, ValueError):
    """A documented precondition of the operation does not hold."""


# Dynamics

class NegativeTime(GraphAnalysisError, ValueError):
    """Heat evolution requested for t < 0."""


class UnstableStep(GraphAnalysisError, ValueError):
    """Explicit Euler step exceeds the stability bound."""


class InvalidTimeGrid(GraphAnalysisError, ValueError):
    """Final time is not an integer multiple of the step."""


class ConstantInitialCondition(GraphAnalysisError, ValueError):
    """A decay certificate needs a nonconstant initial condition."""


class NotSubStochastic(GraphAnalysisError, ValueError):
    """Some node has sum_j w_ij > mu_i, so I + Laplacian is not a walk."""


# GNN simulation

class InvalidDims(GraphAnalysisError, ValueError):
    """Layer widths do not chain or are not positive."""


class InsufficientData(GraphAnalysisError, ValueError):
    """Too few recorded depths to fit a decay rate."""


class AllZeroEnergies(GraphAnalysisError, ValueError):
    """Every recorded energy underflowed, nothing to fit."""


# I/O

class ParseError(GraphAnalysisError, ValueError):
    """A line of an input file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        location = ""
        if path is not None:
            location += f"{path}"
        if line is not None:
            location += f":{line}" if location else f"line {line}"
        super().__init__(f"{location}: {message}" if location else message)


class MissingMeasure(GraphAnalysisError, ValueError):
    """Neither a preset nor a measure file was provided."""


class IoError(GraphAnalysisError, OSError):
    """A report could not be written."""
