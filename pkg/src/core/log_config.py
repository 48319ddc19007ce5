import logging
import sys

from pythonjsonlogger.json import JsonFormatter


PLAIN_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
JSON_FIELDS = "%(asctime)s %(levelname)s %(name)s %(message)s"


def setup_logging(level: str = "INFO", json_output: bool = True) -> None:
    """
    Configure the root logger once for the CLI process.

    - Logs always go to ``stderr``; ``stdout`` is reserved for command output.
    - With ``json_output`` each record is one JSON object (python-json-logger),
      otherwise the plain ``asctime level name: message`` layout is used.
    - Calling it again replaces the previous handler.

    :param level: Log level name (``DEBUG`` … ``CRITICAL``).
    :type level: str
    :param json_output: Emit JSON lines instead of plain text.
    :type json_output: bool
    :return: None
    :rtype: None

    Example JSON line::

        {"asctime": "2025-10-01 12:00:00,000", "levelname": "INFO",
         "name": "src.services.harness", "message": "Evaluated 640 scenarios"}
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_action_exit", False):
            root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler._action_exit = True  # type: ignore[attr-defined]
    if json_output:
        handler.setFormatter(JsonFormatter(JSON_FIELDS))
    else:
        handler.setFormatter(logging.Formatter(PLAIN_FORMAT))

    root.addHandler(handler)
    root.setLevel(level.upper())
