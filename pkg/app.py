import argparse
import logging
import sys
from datetime import datetime
from typing import List, Optional

from config import CODE_VERSION, get_config, validate_config
from commands import COMMANDS


def setup_logging(level: str = 'INFO', log_file: Optional[str] = None):
    """Setup console (and optional file) logging for the toolkit"""
    # Create custom formatter
    class ColoredFormatter(logging.Formatter):
        COLORS = {
            'DEBUG': '\033[36m',    # Cyan
            'INFO': '\033[32m',     # Green
            'WARNING': '\033[33m',  # Yellow
            'ERROR': '\033[31m',    # Red
            'CRITICAL': '\033[35m', # Magenta
        }
        RESET = '\033[0m'

        def format(self, record):
            timestamp = datetime.fromtimestamp(record.created).strftime('%Y-%m-%d %H:%M:%S.%f')[:-3]
            color = self.COLORS.get(record.levelname, '') if self.use_color else ''
            reset = self.RESET if self.use_color else ''

            # Format: [TIMESTAMP] [LEVEL] [MODULE] MESSAGE
            return f"{color}[{timestamp}] [{record.levelname}] [{record.name}] {record.getMessage()}{reset}"

    ColoredFormatter.use_color = sys.stderr.isatty()

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(ColoredFormatter())
    root_logger.addHandler(console_handler)

    if log_file:
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter('[%(asctime)s] [%(levelname)s] [%(name)s] %(message)s'))
        root_logger.addHandler(file_handler)

    logging.getLogger('attnseg').setLevel(level)
    # third-party chatter
    logging.getLogger('PIL').setLevel(logging.WARNING)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='attnseg',
        description='Joint fire classification and segmentation with classification-gated attention',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {CODE_VERSION}')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse usage errors exit with 2, --help/--version with 0
        return int(e.code or 0)

    config_class = get_config(getattr(args, 'preset', None))
    setup_logging(args.log_level or config_class.LOG_LEVEL, args.log_file)
    logger = logging.getLogger('attnseg.app')

    try:
        validate_config(config_class)
    except ValueError as e:
        logger.error(f"❌ Configuration validation failed: {e}")
        return 2
    logger.debug(f"🔧 Preset {config_class.PRESET}, command {args.command}")

    return args.func(args)


if __name__ == '__main__':
    sys.exit(main())
