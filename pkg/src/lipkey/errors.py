"""Exception hierarchy shared across the package."""


class LipkeyError(Exception):
    """Base class for all lipkey errors."""


class PgmFormatError(LipkeyError):
    """Malformed or unsupported PGM payload."""


class BoundsError(LipkeyError):
    """A coordinate, rectangle or sampling pattern falls outside the image."""


class SizeError(LipkeyError):
    """An image or point set is too small for the requested operation."""


class ParameterError(LipkeyError):
    """A numeric parameter is outside its documented range."""


class FitError(LipkeyError):
    """A least-squares fit is rank deficient or otherwise impossible."""


class DegenerateQuadraticError(FitError):
    """Quadratic has |A| ~ 0, so its vertex is undefined."""


class TrainingError(LipkeyError):
    """Boosting cannot make progress on the given samples."""


class DetectionMissError(LipkeyError):
    """No face or mouth window was accepted by the cascade."""


class ManifestError(LipkeyError):
    """A dataset manifest row failed validation."""


class ConfigError(LipkeyError):
    """Unknown configuration key or unparseable value."""
