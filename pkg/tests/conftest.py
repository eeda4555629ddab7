import logging
from pathlib import Path

import pytest

RESOURCES = Path(__file__).parent / "resources"


@pytest.fixture(scope="session")
def anyio_backend():
    return "asyncio"


@pytest.fixture
def resources() -> Path:
    return RESOURCES


# root logger, so every wardowski_solver.* logger inherits the level
logger = logging.getLogger()


def pytest_configure(config):
    """
    Switch the root logger to DEBUG when pytest runs with -v or more.
    """
    verbose_level = config.getoption("verbose")

    if verbose_level > 0:
        print("\nPytest running in verbose mode, setting log level to DEBUG.")
        logger.setLevel(logging.DEBUG)

        if not logger.handlers:  # avoid duplicate handlers
            handler = logging.StreamHandler()
            formatter = logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )
            handler.setFormatter(formatter)
            logger.addHandler(handler)
