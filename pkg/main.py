"""Main entry point for the gptent command line."""

import sys

import structlog

from gptent.cli import run_command
from gptent.config import load_settings
from gptent.logging_config import setup_logging


def main():
    """Load settings, configure logging and dispatch the command in ``sys.argv``."""
    try:
        settings = load_settings()
        setup_logging(settings.log_level, settings.log_json, settings.color)
        sys.exit(run_command(sys.argv[1:]))
    except KeyboardInterrupt:
        sys.exit(130)
    except Exception as e:
        structlog.get_logger(__name__).error("fatal_error", error=str(e), exc_info=True)
        print(f"\nError: {e}", file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    main()
