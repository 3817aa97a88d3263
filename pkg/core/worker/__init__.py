from .dispatch import Dispatch
from .workspace import Workspace, WorkspaceClass, DatasetFolder
from .config import RunConfig, LoadRunConfig
from .exceptions import *
