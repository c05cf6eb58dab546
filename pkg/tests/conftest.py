from __future__ import annotations

import pytest

import netgen
from gridsentry.netmodel import Snapshot


@pytest.fixture
def two_bus() -> Snapshot:
    return netgen.parse(netgen.two_bus())


@pytest.fixture
def three_bus() -> Snapshot:
    return netgen.parse(netgen.three_bus())


@pytest.fixture
def ten_machine() -> Snapshot:
    return netgen.parse(netgen.ten_machine())
