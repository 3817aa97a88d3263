from enum import Enum, auto


class Environment(Enum):
    GenData = auto()
    EncodeDump = auto()

    Train = auto()
    Forecast = auto()
    Eval = auto()
    Ablate = auto()

    GetWorkspaceData = auto()

    Notification = auto()
