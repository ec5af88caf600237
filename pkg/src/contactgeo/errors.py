"""Exception hierarchy shared by every module."""


class ContactGeoError(Exception):
    """Base class for toolkit errors."""


class DomainError(ContactGeoError, ValueError):
    """An argument lies outside the domain of the operation."""


class HypothesisError(ContactGeoError):
    """A closed-form result was requested for an input that fails its hypotheses."""


class IntegrityError(ContactGeoError):
    """Two independent computations disagree, or a checked inequality fails."""


class AccuracyError(ContactGeoError):
    """Step-halving diagnostics exceed the accuracy budget; use a smaller step."""


class BracketError(ContactGeoError, ValueError):
    """A search bracket does not straddle the target."""


class UnsupportedError(ContactGeoError):
    """The requested input kind has no known closed-form value."""
