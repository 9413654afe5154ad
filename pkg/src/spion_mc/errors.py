"""Exception types shared across the package.

Each carries the process exit code the CLI maps it to.
"""


class SpionError(Exception):
    exit_code = 1


class ConfigError(SpionError, ValueError):
    exit_code = 2


class NumericError(SpionError, ArithmeticError):
    exit_code = 3


class SyncNotFound(SpionError):
    exit_code = 4
