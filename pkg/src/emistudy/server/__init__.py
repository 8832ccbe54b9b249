from .app import ServerSettings, build_service, create_app, create_app_from_settings
from .service import StudyService

__all__ = ["ServerSettings", "StudyService", "build_service", "create_app", "create_app_from_settings"]
