import logging
import sys

_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = "INFO") -> None:
    """
    Sends every log record to stderr so emitted CSV/JSON on stdout stays clean.
    Safe to call more than once; later calls only change the level.
    """
    root = logging.getLogger()
    if not any(getattr(h, "_pricing_lab", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_FORMAT))
        handler._pricing_lab = True  # type: ignore[attr-defined]
        root.addHandler(handler)
    root.setLevel(level.upper())
