# Copyright (C) 2023 The ovalcount developers
#
# This file is part of ovalcount
#
# SPDX-License-Identifier:    LGPL-3.0-or-later
"""Unit tests of the log.py module."""
import logging

from ovalcount.log import DEFAULT_LOG_FORMAT, ColoredLevelFormatter, Timer, colorize


def make_record(level: int, msg: str = "sample 3 skipped") -> logging.LogRecord:
    return logging.LogRecord("ovalcount.cli", level, __file__, 1, msg, None, None)


def test_colored_levels_stay_aligned():
    colored = ColoredLevelFormatter("%(levelname)-8s|%(message)s")
    plain = logging.Formatter("%(levelname)-8s|%(message)s")
    for level in (logging.DEBUG, logging.INFO, logging.WARNING, logging.ERROR):
        record = make_record(level)
        line = colored.format(record)
        color = ColoredLevelFormatter.LEVEL_COLORS[level]
        expected_level = colorize(f"{logging.getLevelName(level):<8}", color)
        assert line == f"{expected_level}|sample 3 skipped"
        # the record handed to other handlers keeps its plain level name
        name = logging.getLevelName(level)
        assert record.levelname == name
        assert plain.format(record) == f"{name:<8}|sample 3 skipped"


def test_unknown_levels_are_not_colored():
    formatter = ColoredLevelFormatter(DEFAULT_LOG_FORMAT)
    assert "\x1b[" not in formatter.format(make_record(25))


def test_timer_reports_to_stream():
    lines = []
    with Timer(lines.append, "count batch") as timer:
        pass
    assert timer.elapsed >= 0
    assert len(lines) == 1
    assert lines[0].startswith("count batch - took ")
    assert lines[0].endswith(" ms")
