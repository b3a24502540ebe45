"""Exception types shared across the library."""


class FormlangError(Exception):
    pass


class ParseError(FormlangError):
    """Malformed DSL text. ``offset`` is the character position of the problem."""

    def __init__(self, message, offset, expected=None):
        self.offset = offset
        self.expected = expected
        text = f"{message} at offset {offset}"
        if expected:
            text += f" (expected {expected})"
        super().__init__(text)


class FormatError(FormlangError):
    """A structured document does not have the expected shape."""


class IllFormedError(FormlangError):
    """An object violates its representation invariants."""

    def __init__(self, defects):
        self.defects = list(defects)
        super().__init__("; ".join(d.detail for d in self.defects))


class ResourceError(FormlangError):
    pass


class AlphabetMismatch(FormlangError):
    pass


class UnboundVariable(FormlangError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"variable {name!r} has no value in the assignment")

    def __str__(self):
        return self.args[0]


class NotCnfError(FormlangError):
    pass
