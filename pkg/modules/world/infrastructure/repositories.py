"""Episode persistence on the local file system.

Each episode is one compressed ``.npz`` container of named arrays plus a
JSON sidecar with the config echo, the seed and the schema version.
"""

from __future__ import annotations

import json
import re
import zipfile
from pathlib import Path
from typing import Any

import numpy as np

from modules.world.application.interfaces import EpisodeRepository
from modules.world.domain.entities import Episode, EpisodeLabels
from shared.exceptions import DataNotFoundError
from shared.logging import get_logger

logger = get_logger(__name__)

SCHEMA_VERSION = 1
_EPISODE_PATTERN = re.compile(r"^episode_(\d{5})\.npz$")
# Fixed member timestamp so identical episodes give identical files.
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def images_to_uint8(images: np.ndarray) -> np.ndarray:
    """Quantize [0, 1] float images to 8-bit integers."""
    return np.clip(np.rint(images * 255.0), 0, 255).astype(np.uint8)


def images_from_uint8(images: np.ndarray) -> np.ndarray:
    """Map 8-bit images back to float32 in [0, 1]."""
    return images.astype(np.float32) / 255.0


def write_npz(path: Path, arrays: dict[str, np.ndarray]) -> None:
    """Write a compressed ``.npz`` container readable by ``np.load``."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as archive:
        for name, array in arrays.items():
            member = zipfile.ZipInfo(f"{name}.npy", date_time=_ZIP_DATE)
            member.compress_type = zipfile.ZIP_DEFLATED
            with archive.open(member, "w", force_zip64=True) as handle:
                np.lib.format.write_array(handle, np.asarray(array), allow_pickle=False)


class NpzEpisodeRepository(EpisodeRepository):
    """Stores episodes as ``episode_XXXXX.npz`` + ``episode_XXXXX.json``."""

    def __init__(self, root: Path | str) -> None:
        self._root = Path(root)

    @property
    def root(self) -> Path:
        return self._root

    def _array_path(self, index: int) -> Path:
        return self._root / f"episode_{index:05d}.npz"

    def _metadata_path(self, index: int) -> Path:
        return self._root / f"episode_{index:05d}.json"

    def save(self, index: int, episode: Episode, metadata: dict[str, Any]) -> None:
        self._root.mkdir(parents=True, exist_ok=True)
        labels = episode.labels
        write_npz(
            self._array_path(index),
            {
                "images": images_to_uint8(episode.images),
                "instance": labels.instance_maps.astype(np.int32),
                "segmentation": labels.segmentation.astype(np.float32),
                "centers": labels.center_heatmaps.astype(np.float32),
                "offsets": labels.offsets.astype(np.float32),
                "flows": labels.flows.astype(np.float32),
            },
        )
        sidecar = {"schema_version": SCHEMA_VERSION, "seed": episode.seed, **metadata}
        self._metadata_path(index).write_text(
            json.dumps(sidecar, indent=2, sort_keys=True), encoding="utf-8"
        )
        logger.debug("episode_saved", index=index, path=str(self._array_path(index)))

    def load(self, index: int) -> Episode:
        path = self._array_path(index)
        if not path.exists():
            raise DataNotFoundError("episode", str(path))
        with np.load(path) as arrays:
            labels = EpisodeLabels(
                instance_maps=arrays["instance"],
                segmentation=arrays["segmentation"],
                center_heatmaps=arrays["centers"],
                offsets=arrays["offsets"],
                flows=arrays["flows"],
            )
            images = images_from_uint8(arrays["images"])
        return Episode(images=images, labels=labels, seed=int(self.metadata(index)["seed"]))

    def metadata(self, index: int) -> dict[str, Any]:
        path = self._metadata_path(index)
        if not path.exists():
            raise DataNotFoundError("episode metadata", str(path))
        return json.loads(path.read_text(encoding="utf-8"))

    def indices(self) -> list[int]:
        if not self._root.exists():
            return []
        found = []
        for path in self._root.iterdir():
            match = _EPISODE_PATTERN.match(path.name)
            if match:
                found.append(int(match.group(1)))
        return sorted(found)
