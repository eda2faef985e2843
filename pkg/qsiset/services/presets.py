"""
Built-in bound models P1..P6 shipped as read-only JSON documents.
"""
import glob
import logging
import os
from typing import List

from services.bounds import BoundModel
from utils.config import Config
from utils.errors import ArgumentError

logger = logging.getLogger(__name__)


def list_presets() -> List[str]:
    """Names of the shipped presets, sorted."""
    paths = glob.glob(os.path.join(Config.PRESETS_DIR, '*.json'))
    return sorted(os.path.splitext(os.path.basename(p))[0] for p in paths)


def load_preset(name: str) -> BoundModel:
    key = name.upper().replace('.', '')
    path = os.path.join(Config.PRESETS_DIR, f"{key}.json")
    if not os.path.isfile(path):
        raise ArgumentError(f"Unknown preset {name!r}; available: {', '.join(list_presets())}")
    return BoundModel.from_json_file(path)


def resolve_model(reference: str) -> BoundModel:
    """A model from a preset name (P2, P.2) or a path to a JSON document."""
    if not reference:
        raise ArgumentError("No model given; pass a preset name or a JSON file")
    if os.path.isfile(reference):
        logger.debug(f"Loading model file {reference}")
        return BoundModel.from_json_file(reference)
    return load_preset(reference)
