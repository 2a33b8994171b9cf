import enum


class Kind(enum.Enum):
    DEBIT = 1
    CREDIT = 2
