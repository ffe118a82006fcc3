"""pytest plugin registering the requirement markers."""

import pytest


def pytest_configure(config: pytest.Config) -> None:
    """Register custom markers."""
    config.addinivalue_line("markers", "requirement: test linked to a design/specs requirement")
    config.addinivalue_line("markers", "requirement_id(id): test with a specific requirement ID")
