"""Exception types raised across the package."""


class DegenerateError(ValueError):
    """A numerical quantity is undefined: zero variance, singular matrix, etc."""


class CollinearityError(DegenerateError):
    """Regressors (or correlated inputs) are perfectly collinear."""
