from enum import Enum, auto


class NotificationType(Enum):
    ## Data
    GeneratingTrack = auto()
    WritingTracks = auto()
    WritingImages = auto()
    SplitWritten = auto()
    LoadingTracks = auto()
    LoadingImages = auto()

    ## Encoding
    EncodingDumped = auto()

    ## Training
    TrainingStarted = auto()
    ParameterCount = auto()
    TrainingStep = auto()
    TrainingEpoch = auto()
    TrainingFinished = auto()
    CheckpointSaved = auto()
    CheckpointLoaded = auto()

    # Errors
    TrainingDiverged = auto()

    ## Forecast
    ForecastInstance = auto()
    ForecastFinished = auto()

    # Warnings
    ForecastParseFailure = auto()  # generated text that does not follow the label grammar

    ## Evaluation
    MetricsWritten = auto()
    RegressionWritten = auto()

    ## Ablation
    AblationStarted = auto()
    AblationCellStarted = auto()
    AblationCellFinished = auto()
    AblationCellFailed = auto()
    AblationFinished = auto()

    ## Config
    ConfigResolved = auto()

    # Generic
    Debug = auto()
    Info = auto()
    Error = auto()
    Success = auto()
    Warning = auto()


class Notification:
    def __init__(self, notificationType: NotificationType, *args):
        self.notificationType = notificationType
        self.args = args

    def __repr__(self):
        return f"<{self.notificationType}: {self.args}>"

    def __str__(self):
        return f"[{self.notificationType.name}] " + " ".join(str(arg) for arg in self.args)
