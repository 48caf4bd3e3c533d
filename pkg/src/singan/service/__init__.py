from .app import create_app, default_data_dir
from .jobs import JobManager, QueueFullError

__all__ = ["create_app", "default_data_dir", "JobManager", "QueueFullError"]
