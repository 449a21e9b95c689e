"""Exception hierarchy shared by all modules."""


class TomographyError(Exception):
    """Base class for every error raised by this package."""


class NumericFailure(TomographyError):
    """Numerical failure. The CLI maps these to exit code 3."""


class InvalidHamiltonian(TomographyError, ValueError):
    pass


class InvalidInterval(TomographyError, ValueError):
    pass


class DimMismatch(TomographyError, ValueError):
    pass


class AmbiguousClustering(NumericFailure):
    pass


class IllConditionedInverse(NumericFailure):
    pass


class NotEnoughData(TomographyError, ValueError):
    pass


class DuplicateRow(TomographyError, ValueError):
    pass


class PoleAtEvaluation(NumericFailure):
    pass


class DomainError(TomographyError, ValueError):
    pass


class ZeroCrossing(NumericFailure):
    pass


class RefinementExhausted(NumericFailure):
    pass


class NoRankGap(NumericFailure):
    pass


class RankDeficient(NumericFailure):
    pass


class RepeatedRoots(NumericFailure):
    pass


class SingularStencil(NumericFailure):
    pass


class PartialVisibility(NumericFailure):
    def __init__(self, d_obs: int, n_sq: int):
        super().__init__(f"observable dimension {d_obs} < {n_sq}")
        self.d_obs = d_obs
        self.n_sq = n_sq


class JordanDetectionAmbiguous(NumericFailure):
    pass


class BracketError(NumericFailure):
    pass


class MatchingAmbiguous(NumericFailure):
    pass


class ConfigError(TomographyError, ValueError):
    """Bad user configuration. The CLI maps these to exit code 2."""
