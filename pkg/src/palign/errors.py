"""Exception types shared across the package.

Configuration and usage problems raise the builtin ``ValueError``; the
classes below separate bad *data* from numerical failures so callers
(notably the CLI) can map them to distinct exit codes.
"""


class DataError(Exception):
    """Input data is malformed: non-finite entries, shape mismatches in
    files, unpaired sample counts, unreadable matrix files."""


class NumericalError(Exception):
    """A computation failed numerically: singular matrix where full rank
    is required, diverging training loss, and similar."""
