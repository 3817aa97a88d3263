from typing import Optional

from .basedispatch import BaseDispatch, Index
from .config import RunConfig
from .workspace import Workspace

from ..commands import Environment


def _config(values) -> RunConfig:
    if isinstance(values, RunConfig):
        return values
    return RunConfig(values)


class Dispatch(BaseDispatch):
    """Commands take the resolved config as a plain dict so they cross the process queue."""

    @Index(Environment.GenData)
    def genData(self, config, out: Optional[str] = None):
        return Workspace.genData(_config(config), out)

    @Index(Environment.EncodeDump)
    def encodeDump(self, config, data: str, instance: int = 0, textOnly: bool = False, out: Optional[str] = None):
        return Workspace.encodeDump(_config(config), data, instance, textOnly, out)

    @Index(Environment.Train)
    def train(self, config, data: str, out: Optional[str] = None):
        return Workspace.train(_config(config), data, out)

    @Index(Environment.Forecast)
    def forecast(self, config, data: str, checkpoint: Optional[str] = None, split: str = "test",
                 oracle: bool = False, out: Optional[str] = None):
        return Workspace.forecast(_config(config), data, checkpoint, split, oracle, out)

    @Index(Environment.Eval)
    def eval(self, config, forecasts: str, out: Optional[str] = None):
        return Workspace.eval(_config(config), forecasts, out)

    @Index(Environment.Ablate)
    def ablate(self, config, data: str, out: Optional[str] = None):
        return Workspace.ablate(_config(config), data, out)

    @Index(Environment.GetWorkspaceData)
    def getWorkspaceData(self, outputPath: Optional[str] = None):
        if outputPath is not None:
            Workspace.setOutputPath(outputPath)
        return Workspace.getWorkspaceData()
