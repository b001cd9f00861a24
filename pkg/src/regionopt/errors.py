"""Failure types shared across the solvers and the command line runner."""


class ConfigError(ValueError):
    """Bad or missing run configuration; maps to exit code 2."""


class SolverFailure(RuntimeError):
    """A discrete solve broke down (singular system, lost positivity, ...);
    maps to exit code 3."""


class ConvergenceFailure(RuntimeError):
    """An iteration failed to reach its tolerance within its budget;
    maps to exit code 4."""
