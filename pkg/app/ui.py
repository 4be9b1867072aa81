import json
import logging
import sys
from typing import Callable

from src import config
from src.errors import NumericalError, PolypenError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def parse_csv(text: str, field: str):
    """Convert a comma-separated string into a list of floats; errors name the field."""
    if not text:
        return []
    try:
        return [float(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(field, f"cannot parse {text!r} as numbers") from exc


def emit_json(payload: dict, stream=None) -> None:
    """Print payload as JSON tagged with the output schema version."""
    stream = sys.stdout if stream is None else stream
    print(json.dumps({"schema_version": config.SCHEMA_VERSION, **payload}, indent=2), file=stream)


def emit_lines(pairs: dict, stream=None) -> None:
    """Print 'key = value' lines; floats keep all 17 significant digits."""
    stream = sys.stdout if stream is None else stream
    for key, value in pairs.items():
        if isinstance(value, float):
            value = repr(value)
        elif isinstance(value, (list, tuple)):
            value = "[" + ", ".join(repr(float(c)) for c in value) + "]"
        print(f"{key} = {value}", file=stream)


def guarded(func: Callable, args) -> int:
    """
    Run a subcommand and map library errors to exit codes.

    ValidationError exits 2 and NumericalError exits 3, each with a one-line message
    naming the offending field on stderr.
    """
    try:
        return func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PolypenError as exc:
        logger.exception("unexpected library error")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
