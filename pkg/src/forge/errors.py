"""Exception hierarchy; the CLI maps each class to an exit code."""


class ForgeError(Exception):
    exit_code = 2


class InputError(ForgeError, ValueError):
    """Malformed or out-of-contract input."""

    exit_code = 2


class GuardRailExceeded(ForgeError):
    """Exhaustive search refused because the state space is too large."""

    exit_code = 3

    def __init__(self, what, estimate, limit):
        super().__init__(f"{what}: estimated {estimate} states exceeds limit {limit}")
        self.estimate = estimate
        self.limit = limit


class OracleExhausted(ForgeError):
    """No consistent decision exists for a required commitment."""

    exit_code = 4

    def __init__(self, message, commitment=None, round_no=None):
        super().__init__(message)
        self.commitment = commitment
        self.round_no = round_no


class DivisionExhausted(OracleExhausted):
    pass


class UndefinedSum(ForgeError):
    """A partial-semigroup sum left the carrier (e.g. bounded-naturals overflow)."""

    exit_code = 4

    def __init__(self, message, index_set=None):
        super().__init__(message)
        self.index_set = index_set


class UndefinedColor(ForgeError):
    """An induced coloring has no consistent color class (principal degeneracy)."""

    exit_code = 4
