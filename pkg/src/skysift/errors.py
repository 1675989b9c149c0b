"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration or input data. CLI maps this to exit code 2."""


class NumericalError(ArithmeticError):
    """A numerical routine could not meet its accuracy contract. CLI exit code 3."""
