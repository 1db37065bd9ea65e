"""Exception types raised across the package."""


class ElicitError(Exception):
    """Base class for all errors raised by elicitsim."""


class DataError(ElicitError):
    """Problem with rating data (content, file, or format)."""


class DuplicateRating(DataError):
    def __init__(self, user, item):
        super().__init__(f"duplicate rating for user {user!r}, item {item!r}")
        self.user = user
        self.item = item


class ValueOutOfRange(DataError):
    def __init__(self, value, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"rating value {value!r} is not an integer in 1..5{where}")
        self.value = value
        self.line = line


class DomainMismatch(DataError):
    pass


class EmptyPopulation(DataError):
    pass


class MissingFile(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, line, reason=""):
        super().__init__(f"malformed row at line {line}" + (f": {reason}" if reason else ""))
        self.line = line


class TruncatedBlock(DataError):
    def __init__(self, line, missing):
        super().__init__(f"review block ending at line {line} lacks {', '.join(missing)}")
        self.line = line
        self.missing = missing


class UnparsableScore(DataError):
    def __init__(self, line, text):
        super().__init__(f"cannot parse score {text!r} at line {line}")
        self.line = line


class EmptyResult(DataError):
    pass


class EmptyTrainingSet(ElicitError):
    pass


class EmptyCandidateSet(ElicitError):
    pass


class NonFiniteScore(ElicitError):
    def __init__(self, item, score):
        super().__init__(f"non-finite score {score!r} for item {item!r}")
        self.item = item


class TooFewUsers(ElicitError):
    pass


class InsufficientRatings(ElicitError):
    def __init__(self, user, count, needed):
        super().__init__(f"user {user!r} has {count} ratings, needs at least {needed}")
        self.user = user


class MissingSplit(ElicitError):
    def __init__(self, user):
        super().__init__(f"no split for test user {user!r}")
        self.user = user


class EmptyTestSet(ElicitError):
    pass


class NoRecommendations(ElicitError):
    pass


class ZeroBaseline(ElicitError):
    pass


class ConfigError(ElicitError):
    def __init__(self, key, reason):
        super().__init__(f"config key {key!r}: {reason}")
        self.key = key
