from .controller import Controller
from .commands import Environment
from .notifications import Notification, NotificationType
from .worker.variables import CORE_VERSION, OUTPUT_DIR_ENV
