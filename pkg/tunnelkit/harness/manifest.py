"""
Run manifests: what was run, with which configuration, and what it wrote
"""
import json
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from dateutil import parser as date_parser

from tunnelkit.config.config import TOOL_VERSION, logger
from tunnelkit.utils.helpers import write_json

MANIFEST_NAME = 'manifest.json'


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunManifest:
    command: str
    label: str
    config_hash: str
    config: Dict[str, Any]
    tool_version: str = TOOL_VERSION
    started_at: str = field(default_factory=utc_now)
    finished_at: Optional[str] = None
    status: str = 'running'
    outputs: List[str] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def add_output(self, directory: str, path: str) -> str:
        relative = os.path.relpath(path, directory)
        if relative not in self.outputs:
            self.outputs.append(relative)
        return path

    def finish(self, status: str = 'completed') -> None:
        self.status = status
        self.finished_at = utc_now()

    @property
    def started(self) -> datetime:
        return date_parser.isoparse(self.started_at)

    @property
    def duration_seconds(self) -> Optional[float]:
        if self.finished_at is None:
            return None
        return (date_parser.isoparse(self.finished_at) - self.started).total_seconds()

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['duration_seconds'] = self.duration_seconds
        return data

    def write(self, directory: str) -> str:
        """Atomically (re)write manifest.json in directory"""
        path = os.path.join(directory, MANIFEST_NAME)
        write_json(path, self.to_dict())
        return path

    @classmethod
    def load(cls, path: str) -> 'RunManifest':
        with open(path) as handle:
            data = json.load(handle)
        data.pop('duration_seconds', None)
        return cls(**data)


def find_manifests(root: str) -> List[RunManifest]:
    """Every readable manifest under root, newest first"""
    manifests = []
    for directory, _, files in os.walk(root):
        if MANIFEST_NAME not in files:
            continue
        path = os.path.join(directory, MANIFEST_NAME)
        try:
            manifest = RunManifest.load(path)
            manifest.diagnostics.setdefault('directory', os.path.relpath(directory, root))
            manifests.append(manifest)
        except (ValueError, TypeError, OSError) as e:
            logger.warning(f"Skipping unreadable manifest {path}: {e}")
    return sorted(manifests, key=lambda m: m.started, reverse=True)
