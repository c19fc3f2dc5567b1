"""
Shared fixtures: bundled masks, services and cached solves.
"""
import json
from pathlib import Path

import pytest

from dilation.services.cascade_service import CascadeService
from dilation.services.correspond_service import CorrespondService
from dilation.services.mask_service import MaskService
from dilation.services.refine_service import RefineService
from dilation.services.transfer_service import TransferService

GOLDENS_DIR = Path(__file__).parent / "goldens"


@pytest.fixture(scope="session")
def golden():
    """Load tests/goldens/<name>.json."""

    def _load(name: str) -> dict:
        return json.loads((GOLDENS_DIR / f"{name}.json").read_text(encoding="utf-8"))

    return _load


@pytest.fixture(scope="session")
def mask_service() -> MaskService:
    return MaskService()


@pytest.fixture(scope="session")
def load_mask(mask_service):
    cache = {}

    def _load(name: str):
        if name not in cache:
            cache[name] = mask_service.load(name)
        return cache[name]

    return _load


@pytest.fixture(scope="session")
def cascade() -> CascadeService:
    return CascadeService(support_cap=2_000_000, oracle_cap=1_000_000, threads=1)


@pytest.fixture(scope="session")
def transfer(cascade) -> TransferService:
    return TransferService(probe_depth=12, threads=1, cascade=cascade)


@pytest.fixture(scope="session")
def refine(cascade) -> RefineService:
    return RefineService(threads=1, cascade=cascade)


@pytest.fixture(scope="session")
def correspond() -> CorrespondService:
    return CorrespondService()


@pytest.fixture(scope="session")
def solved(transfer, load_mask):
    """solve_mask on a bundled mask, cached per (name, normalize)."""
    cache = {}

    def _solve(name: str, normalize: str = "sum1"):
        key = (name, normalize)
        if key not in cache:
            loaded = load_mask(name)
            cache[key] = transfer.solve_mask(loaded.mask, loaded.tiles, normalize)
        return cache[key]

    return _solve
