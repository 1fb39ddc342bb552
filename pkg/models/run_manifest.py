import json
import os
from datetime import datetime, timezone
from typing import Dict, Optional

from utils.io_utils import atomic_write_text

RUN_MANIFEST_NAME = "run_manifest.json"


class RunManifest:
    """Record of one artifact-producing command, written beside its outputs"""

    def __init__(self, command: str, config_snapshot: Dict, code_version: str, seed: int,
                 argv: list = None):
        self.command = command
        self.config_snapshot = config_snapshot
        self.code_version = code_version
        self.seed = seed
        self.argv = argv or []
        self.started_at = datetime.now(timezone.utc)
        self.finished_at: Optional[datetime] = None
        self.exit_status: Optional[int] = None

    def finish(self, exit_status: int):
        self.finished_at = datetime.now(timezone.utc)
        self.exit_status = exit_status

    def to_dict(self) -> Dict:
        return {
            "command": self.command,
            "config_snapshot": self.config_snapshot,
            "code_version": self.code_version,
            "seed": self.seed,
            "argv": self.argv,
            "started_at": self.started_at.isoformat(),
            "finished_at": self.finished_at.isoformat() if self.finished_at else None,
            "exit_status": self.exit_status,
        }

    def write(self, out_dir: str) -> str:
        path = os.path.join(out_dir, RUN_MANIFEST_NAME)
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2, sort_keys=True))
        return path

    @classmethod
    def from_dict(cls, data: Dict):
        manifest = cls(data["command"], data["config_snapshot"], data["code_version"],
                       data["seed"], data.get("argv"))
        manifest.started_at = datetime.fromisoformat(data["started_at"])
        if data.get("finished_at"):
            manifest.finished_at = datetime.fromisoformat(data["finished_at"])
        manifest.exit_status = data.get("exit_status")
        return manifest

    @classmethod
    def read(cls, path: str) -> "RunManifest":
        if os.path.isdir(path):
            path = os.path.join(path, RUN_MANIFEST_NAME)
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))
