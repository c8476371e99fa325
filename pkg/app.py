import argparse
import sys
from typing import List, Optional

import commands
import utils.func as func
from commands.common import common_parser, load_config
from utils.config_updater import ConfigManager
from utils.error_types import DSLException, create_error_response


def build_parser() -> argparse.ArgumentParser:
    """Top-level parser with one subparser per registered command."""
    parser = argparse.ArgumentParser(
        prog="dsl",
        description="Dispersed structured light: simulation, calibration and reconstruction",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {func.get_version()}")
    commands.get_registry().add_subparsers(parser, [common_parser()])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses arguments, prepares configuration and logging, and runs one subcommand.

    Returns:
        int: Process exit code (0 on success, the error category's code otherwise)
    """
    args = build_parser().parse_args(argv)
    # console-only logging until the config names a log file
    func.setup_logging(args.debug, None)
    try:
        ConfigManager(args.config).check_and_update()
        config = load_config(args)
        func.setup_logging(config.debug_mode, config.log_file or None)
        func.log.debug("Running '%s' (version %s)", args.command, func.get_version())
        return int(args.handler(args) or 0)
    except DSLException as e:
        error = create_error_response(e)
        func.log.error(error.to_detailed_string())
        sys.stderr.write(f"error: {error.to_friendly_string()} ({error.error_message})\n")
        return error.exit_code
    except KeyboardInterrupt as e:
        error = create_error_response(e)
        sys.stderr.write(f"{error.to_friendly_string()}\n")
        return error.exit_code
    except Exception as e:
        error = create_error_response(e)
        func.log.critical("Fatal runtime error: %s", error.to_detailed_string(), exc_info=True)
        sys.stderr.write(f"error: {error.to_friendly_string()}\n")
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
