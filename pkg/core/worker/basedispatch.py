import logging
import multiprocessing
import threading

from .exceptions import ErrorTuple, PipeError
from .variables import WORKER_READY
from ..commands import Environment
from ..notifications import Notification, NotificationType

logger = logging.getLogger("pipecore")

_dispatchMap = {}

_logLevels = {
    NotificationType.Debug: logging.DEBUG,
    NotificationType.TrainingStep: logging.DEBUG,
    NotificationType.ForecastInstance: logging.DEBUG,
    NotificationType.Warning: logging.WARNING,
    NotificationType.ForecastParseFailure: logging.WARNING,
    NotificationType.AblationCellFailed: logging.WARNING,
    NotificationType.Error: logging.ERROR,
    NotificationType.TrainingDiverged: logging.ERROR,
}


def Index(env: Environment):
    """Register a handler for env. The handler's result becomes (True, payload);
    PipeError and file system errors become (False, (exitCode, "Class: message"))."""
    def caller(method):
        def runner(self, *args, **kwargs):
            try:
                returns = True, method(self, *args, **kwargs)
            except PipeError as e:
                SendNotification(NotificationType.Error, str(e))
                returns = False, ErrorTuple(e)
            except OSError as e:
                SendNotification(NotificationType.Error, str(e))
                returns = False, (3, f"{e.__class__.__name__}: {e}")

            if isinstance(self, BaseDispatch):
                self.sendEnv(env, returns)
            return returns

        _dispatchMap[env] = runner
        return runner

    return caller


def SetDispatchQueue(requests: multiprocessing.Queue, results: multiprocessing.Queue):
    if BaseDispatch._requests is None:
        BaseDispatch._requests = requests
    if BaseDispatch._results is None:
        BaseDispatch._results = results


class BaseDispatch(threading.Thread):
    _requests = None
    _results = None

    runThread = None

    def __init__(self):
        if self.runThread is None:
            super().__init__(daemon=True)

    def run(self):
        BaseDispatch.runThread = self
        self.send(WORKER_READY)
        while True:
            self._dispatch(self._requests.get())

    def send(self, data):
        if self._results is not None:
            self._results.put(data, False)

    def sendEnv(self, env: Environment, *args):
        self.send([env, *args])

    def _dispatch(self, data):
        if not isinstance(data, list) or not data:
            return None
        method = _dispatchMap.get(data[0])
        if method is not None:
            return method(self, *data[1:])

    def call(self, env: Environment, *args):
        """Run a command in the current thread and return its (ok, payload) tuple."""
        return self._dispatch([env, *args])

    def sendNotification(self, notification: Notification):
        self.sendEnv(Environment.Notification, notification)


def NotificationLevel(notificationType: NotificationType) -> int:
    return _logLevels.get(notificationType, logging.INFO)


def SendNotification(notificationType: NotificationType, *args):
    dispatch = BaseDispatch.runThread
    if dispatch is not None and dispatch._results is not None:
        dispatch.sendNotification(Notification(notificationType, *args))
    else:
        logger.log(NotificationLevel(notificationType), "%s", Notification(notificationType, *args))
