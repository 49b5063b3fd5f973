import sys
import logging

CONSOLE_FORMAT = "%(levelname)s: %(message)s"
RUN_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class ConsoleHandler(logging.StreamHandler):
    pass


def setup_logging(log, level=None, stream=None):
    # main() may run several times in one process (tests): keep one console
    for handler in [h for h in log.handlers if isinstance(h, ConsoleHandler)]:
        log.removeHandler(handler)

    console_handler = ConsoleHandler(stream or sys.stderr)

    if level is not None:
        log.setLevel(level)
        console_handler.setLevel(level)

    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))

    log.addHandler(console_handler)


def setup_module_logging(name, level=None, stream=None):
    """ Sets up package-level logging
    """
    log = logging.getLogger(name)
    setup_logging(log, level=level, stream=stream)
    return log


def add_file_handler(log, path, level=logging.DEBUG):
    """ Also write log records to a run log file

    The logger level drops to level while the handler is attached; console
    handlers keep the threshold they had.

    :return: the handler, for remove_file_handler()
    """
    file_handler = logging.FileHandler(path)
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter(RUN_LOG_FORMAT))
    # level set on the logger itself, restored on removal
    file_handler.previous_level = log.level
    if level < log.getEffectiveLevel():
        for handler in log.handlers:
            if handler.level == logging.NOTSET:
                handler.setLevel(log.getEffectiveLevel())
        log.setLevel(level)
    log.addHandler(file_handler)
    return file_handler


def remove_file_handler(log, handler):
    log.removeHandler(handler)
    handler.close()
    log.setLevel(handler.previous_level)
