"""
Controller side of the worker protocol. Requests are [Environment, *args]
lists; the worker answers with [Environment, (ok, payload)] and streams
[Environment.Notification, Notification] while it works.
"""
import multiprocessing
import os
import queue
import sys
import traceback
from typing import Callable, Optional

from ..commands import Environment
from ..notifications import Notification
from ..worker.variables import (WORKER_LOG_FILE, WORKER_READY, WORKER_STARTUP_TIMEOUT, CheckExists,
                                GetOutputPath)


def GetWorkerLogPath() -> str:
    path = GetOutputPath()
    CheckExists(path, True)
    return os.path.abspath(os.path.join(path, WORKER_LOG_FILE))


def run_server_process(requests: multiprocessing.Queue, results: multiprocessing.Queue, log_path: str):
    if os.path.exists(log_path):
        try:
            os.remove(log_path)
        except OSError:
            pass

    with open(log_path, "w", encoding="utf-8") as log_file:
        sys.stdout = sys.stderr = log_file
        try:
            from ..worker.basedispatch import SetDispatchQueue
            from ..worker.dispatch import Dispatch

            SetDispatchQueue(requests, results)
            dispatch = Dispatch()
            dispatch.start()
            dispatch.join()
        except Exception:
            traceback.print_exc()


class BaseController:
    _process = None
    _requests = None
    _results = None

    def __init__(self):
        cls = self.__class__
        if cls._process is None:
            context = multiprocessing.get_context("spawn")
            cls._requests, cls._results = context.Queue(), context.Queue()
            cls._start(context)

    @classmethod
    def _start(cls, context):
        multiprocessing.freeze_support()
        logPath = GetWorkerLogPath()
        cls._process = context.Process(target=run_server_process, args=(cls._requests, cls._results, logPath),
                                       daemon=True)
        cls._process.start()

        try:
            ready = cls._results.get(timeout=WORKER_STARTUP_TIMEOUT)
        except queue.Empty:
            ready = None
        if ready != WORKER_READY:
            cls.stop()
            if os.path.exists(logPath):
                with open(logPath, "r", encoding="utf-8") as file:
                    print(f"--- Worker Process Error Log ---\n{file.read()}\n--------------------------------",
                          file=sys.__stderr__)
            raise RuntimeError("Worker process failed to start. See log above.")

    def receive_wait(self, timeout: Optional[float] = None):
        return self._results.get(timeout=timeout)

    def sendEnv(self, env: Environment, *args):
        self._requests.put([env, *args], False)

    @classmethod
    def stop(cls):
        if cls._process is not None:
            cls._process.terminate()
            cls._process.join()
            cls._process = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


class Controller(BaseController):
    def call(self, env: Environment, *args, onNotification: Optional[Callable[[Notification], None]] = None):
        """Send a command and block until its (ok, payload) result, forwarding notifications on the way."""
        self.sendEnv(env, *args)
        while True:
            data = self.receive_wait()
            if not isinstance(data, list) or not data:
                continue
            if data[0] == Environment.Notification:
                if onNotification is not None:
                    onNotification(data[1])
            elif data[0] == env:
                return data[1]

    def genData(self, config: dict, out=None, **kwargs):
        return self.call(Environment.GenData, config, out, **kwargs)

    def encodeDump(self, config: dict, data: str, instance: int = 0, textOnly: bool = False, out=None, **kwargs):
        return self.call(Environment.EncodeDump, config, data, instance, textOnly, out, **kwargs)

    def train(self, config: dict, data: str, out=None, **kwargs):
        return self.call(Environment.Train, config, data, out, **kwargs)

    def forecast(self, config: dict, data: str, checkpoint=None, split="test", oracle=False, out=None, **kwargs):
        return self.call(Environment.Forecast, config, data, checkpoint, split, oracle, out, **kwargs)

    def eval(self, config: dict, forecasts: str, out=None, **kwargs):
        return self.call(Environment.Eval, config, forecasts, out, **kwargs)

    def ablate(self, config: dict, data: str, out=None, **kwargs):
        return self.call(Environment.Ablate, config, data, out, **kwargs)

    def getWorkspaceData(self, outputPath=None, **kwargs):
        return self.call(Environment.GetWorkspaceData, outputPath, **kwargs)
