"""Exception hierarchy shared by every module.

Each error carries the CLI exit code it maps to so the command line layer
can translate failures without a lookup table.
"""


class AlluvialError(Exception):
    exit_code = 3


class InvalidDataset(AlluvialError):
    pass


class InvalidOrdering(AlluvialError):
    pass


class EmptyInput(AlluvialError):
    pass


class OutOfRange(AlluvialError):
    pass


class FormatError(AlluvialError):
    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors or [])


class GenerationExhausted(AlluvialError):
    exit_code = 4

    def __init__(self, message, failures=None, seed=None):
        super().__init__(message)
        self.failures = dict(failures or {})
        self.seed = seed


class LayoutOverflow(AlluvialError):
    exit_code = 4


class SingularDesign(AlluvialError):
    exit_code = 4


class InsufficientData(AlluvialError):
    exit_code = 4


class DegenerateVariable(AlluvialError):
    exit_code = 4

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column
