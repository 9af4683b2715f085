from typing import List

import pytest
from loguru import logger

from stikit.coefficients import StandardCoefficients, load_coefficients


@pytest.fixture
def coeffs() -> StandardCoefficients:
    return load_coefficients()


@pytest.fixture
def logged_warnings() -> List[str]:
    """Collects loguru warnings emitted during a test."""
    messages: List[str] = []
    handler_id = logger.add(lambda message: messages.append(str(message)), level="WARNING", format="{message}")
    yield messages
    logger.remove(handler_id)
