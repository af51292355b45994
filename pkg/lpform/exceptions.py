import click


class LpformError(click.ClickException):
    """
    Base class of all lpform errors. Being a ClickException, anything raised
    from the library reaches the command line as "Error: <message>" with
    exit code 1.
    """


class SignalError(LpformError):
    pass


class FrameError(LpformError):
    pass


class WeightError(LpformError):
    pass


class TrackError(LpformError):
    pass


class GridMismatchError(LpformError):

    def __init__(self, what, expected, got):
        super().__init__(
            f"{what}: expected {expected} frames, got {got}."
        )
        self.expected = expected
        self.got = got


class LabelError(LpformError):
    pass


class NoiseError(LpformError):
    pass
