class PipeError(Exception):
    exitCode = 1

    def __init__(self, message: str = "", *args):
        super().__init__(message, *args)
        self.message = message

    def __str__(self):
        return self.message


class ConfigError(PipeError, ValueError):
    exitCode = 2


class DataError(PipeError, ValueError):
    exitCode = 3


class ProjectionError(DataError):
    pass


class VocabularyError(DataError):
    def __init__(self, character: str, offset: int):
        super().__init__(f"character {character!r} at offset {offset} is not in the vocabulary")
        self.character = character
        self.offset = offset


class ForecastParseError(DataError):
    pass


class TrainingDivergence(PipeError, ArithmeticError):
    exitCode = 4


def ErrorTuple(error: BaseException):
    code = getattr(error, "exitCode", 1)
    return code, f"{error.__class__.__name__}: {error}"
