import logging
import os

# Read from the environment; INFO when unset.
LOG_LEVEL = os.getenv("TSA_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(verbose: bool = False) -> None:
    """
    Sets up the root logger once for the CLI. Library modules only call
    logging.getLogger(__name__).
    """
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT)


def announce(message: str, ok: bool = True) -> None:
    """Short status line for the person running the CLI."""
    prefix = "✅" if ok else "⚠️"
    print(f"{prefix} {message}")
