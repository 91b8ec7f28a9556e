# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
from __future__ import annotations

import logging
import sys
import time
from collections.abc import Callable, Mapping

log = logging.getLogger(__name__)

DEFAULT_LOG_FORMAT = (
    "%(asctime)s.%(msecs)03d | %(name)13.13s %(levelname)-8s %(message)s"
)

DEFAULT_LOG_DATE_FORMAT = "%H:%M:%S"


class Timer:
    """Context manager that reports the wall time of its block to ``stream``.

    ``stream`` is usually a bound logger method, e.g. ``log.info``.
    """

    __slots__ = (
        "msg",
        "stream",
        "start",
        "elapsed",
    )

    def __init__(self, stream: Callable[[str], object], msg: str | None = None):
        self.msg = msg
        self.stream = stream
        self.elapsed = 0.0

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, *args):
        self.elapsed = time.monotonic() - self.start
        if self.msg:
            self.stream(f"{self.msg} - took {self.elapsed*1e3:.1f} ms")
        else:
            self.stream(f"elapsed time: {self.elapsed*1e3:.1f} ms")


def colorize(text: str, color: str) -> str:
    return f"\x1b[{color}m{text}\x1b[00m"


class ColoredLevelFormatter(logging.Formatter):
    """Formatter for the experiment runner on a terminal.

    The level name is padded to ``level_width`` before the ANSI codes are
    added, so colored and plain lines stay aligned. Warnings (skipped samples,
    resampled lattices) are bold; debug output is dimmed.
    """

    LEVEL_COLORS: Mapping[int, str] = {
        logging.CRITICAL: "37;41",
        logging.ERROR: "31;01",
        logging.WARNING: "33;01",
        logging.INFO: "36",
        logging.DEBUG: "02",
    }

    def __init__(
        self,
        fmt: str = DEFAULT_LOG_FORMAT,
        datefmt: str = DEFAULT_LOG_DATE_FORMAT,
        level_width: int = 8,
    ) -> None:
        super().__init__(fmt, datefmt)
        self.level_width = level_width

    def format(self, record: logging.LogRecord) -> str:
        color = self.LEVEL_COLORS.get(record.levelno)
        if color is None:
            return super().format(record)
        # the record is shared with other handlers
        record = logging.makeLogRecord(record.__dict__)
        record.levelname = colorize(f"{record.levelname:<{self.level_width}}", color)
        return super().format(record)


def setuplogging(level: int = logging.INFO, color: bool | None = None) -> None:
    """Configure the root logger for the experiment runner.

    Colors are enabled when stderr is a terminal unless ``color`` says otherwise.
    """
    logger = logging.getLogger()
    logger.setLevel(level)

    if color is None:
        color = sys.stderr.isatty()
    formatter: logging.Formatter
    if color:
        formatter = ColoredLevelFormatter(DEFAULT_LOG_FORMAT, DEFAULT_LOG_DATE_FORMAT)
    else:
        formatter = logging.Formatter(DEFAULT_LOG_FORMAT, DEFAULT_LOG_DATE_FORMAT)

    if logger.handlers:
        sh = logger.handlers[0]
    else:
        sh = logging.StreamHandler(sys.stderr)
        logger.addHandler(sh)
    sh.setFormatter(formatter)
    sh.setLevel(level)
