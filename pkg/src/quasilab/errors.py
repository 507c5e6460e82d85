"""Exception types shared by all modules."""


class QuasilabError(Exception):
    """Base class; also used for contract violations (wrong signature etc.)."""


class ParseError(QuasilabError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class BudgetExceeded(QuasilabError):
    """A configured resource cap tripped; callers turn this into 'unknown'."""

    def __init__(self, cap: str, detail: str = ""):
        super().__init__(f"budget '{cap}' exceeded" + (f": {detail}" if detail else ""))
        self.cap = cap
        self.detail = detail


class NotAMember(QuasilabError):
    """The algebra is not in the quasivariety generated by the given class."""


class Truncated(BudgetExceeded):
    """A free algebra or clone closure stopped at its size cap."""

    def __init__(self, detail: str = ""):
        super().__init__("free_size", detail)
