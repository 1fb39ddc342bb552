"""
Helpers shared by the subcommands: common flags, config-file loading with
flag > file > preset precedence, and RunManifest bookkeeping.
"""

import argparse
import json
import os
import sys
import logging
from typing import Any, Dict, Optional

from config import CODE_VERSION, get_config
from models.run_manifest import RunManifest
from utils.error_handlers import UsageError

logger = logging.getLogger('attnseg.cli')

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def common_parser() -> argparse.ArgumentParser:
    """Flags accepted by every subcommand"""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=None, help="random seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--config", default=None,
                        help="JSON settings file, or a run_manifest.json to replay")
    parser.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None,
                        help="deterministic torch kernels and data order (default on)")
    parser.add_argument("--log-level", default=None, type=str.upper, choices=LOG_LEVELS)
    parser.add_argument("--log-file", default=None, help="also write the log to this file")
    return parser


def load_settings_file(path: Optional[str]) -> Dict[str, Any]:
    """Flat JSON settings; a RunManifest contributes its config snapshot"""
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, ValueError) as e:
        raise UsageError(f"Cannot read config file {path}: {e}")
    if not isinstance(data, dict):
        raise UsageError(f"Config file {path} must hold a JSON object")
    if "config_snapshot" in data:
        data = data["config_snapshot"]
    return data


def resolve(args: argparse.Namespace, settings: Dict[str, Any], key: str, default: Any,
            dest: Optional[str] = None) -> Any:
    """Flag value if given, else the settings file, else the default"""
    value = getattr(args, dest or key, None)
    if value is not None:
        return value
    return settings.get(key, default)


def resolve_seed(args: argparse.Namespace, settings: Dict[str, Any]) -> int:
    return int(resolve(args, settings, "seed", get_config().SEED))


def require_out(args: argparse.Namespace, settings: Dict[str, Any], default: Optional[str] = None) -> str:
    out = resolve(args, settings, "out", default)
    if not out:
        raise UsageError("--out is required")
    return out


def start_run(command: str, snapshot: Dict[str, Any], seed: int) -> RunManifest:
    argv = list(sys.argv[1:])
    logger.info(f"🚀 {command} (seed {seed}, version {CODE_VERSION})")
    return RunManifest(command, snapshot, CODE_VERSION, seed, argv)


def finish_run(manifest: RunManifest, out_dir: str, exit_status: int) -> str:
    manifest.finish(exit_status)
    path = manifest.write(out_dir)
    logger.info(f"📝 Run manifest written to {path}")
    return path


def is_non_empty_dir(path: str) -> bool:
    return os.path.isdir(path) and bool(os.listdir(path))


def require(args: argparse.Namespace, settings: Dict[str, Any], key: str, flag: str) -> Any:
    """Like resolve, for values with no default; a replayed run manifest may supply them"""
    value = getattr(args, key, None)
    if value is None or value == []:
        value = settings.get(key)
    if value is None or value == [] or value == "":
        raise UsageError(f"{flag} is required unless the --config file supplies it")
    return value
