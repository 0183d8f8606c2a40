import logging
from typing import Tuple, Type

from pydantic import Field
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource

from models.learner import DEFAULT_LAMBDA
from services.exact_solvers import DEFAULT_MATRIX_BUDGET

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class AppSettings(BaseSettings):
    """Ambient defaults of the command line; values come from flags only"""
    log_level: str = "INFO"
    log_format: str = LOG_FORMAT
    default_lambda: float = Field(DEFAULT_LAMBDA, gt=0)
    matrix_budget: int = Field(DEFAULT_MATRIX_BUDGET, ge=1)
    reports_dir: str = "reports"

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)


def configure_logging(settings: AppSettings) -> None:
    logging.basicConfig(level=getattr(logging, settings.log_level.upper(), logging.INFO),
                        format=settings.log_format, force=True)
