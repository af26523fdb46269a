import datetime
import logging
import sys

from colorama import Fore, Style

LEVELS = {1: logging.DEBUG, 2: logging.INFO, 3: logging.WARNING, 4: logging.ERROR, 5: logging.CRITICAL}


class ColoredFormatter(logging.Formatter):
    LEVEL_STYLES = {
        logging.DEBUG: ('DEBUG', '^', Fore.CYAN),
        logging.INFO: ('INFO', '+', Fore.GREEN),
        logging.WARNING: ('WARNING', '!', Fore.YELLOW),
        logging.ERROR: ('ERROR', '#', Fore.RED),
        logging.CRITICAL: ('CRITICAL', '*', Fore.MAGENTA),
    }

    def format(self, record):
        time = datetime.datetime.fromtimestamp(record.created).strftime('%Y-%m-%d %H:%M:%S')
        reset = Style.RESET_ALL
        level_name, icon, color = self.LEVEL_STYLES.get(record.levelno, ('', '', ''))
        level_icon = f'[{Style.BRIGHT}{color}{icon}{reset}]' if icon else ''
        highlight_color = f'{Style.BRIGHT}{color}'
        message = super().format(record)
        for word in message.split():
            if word.startswith('<<') and word.endswith('>>'):
                message = message.replace(word, f'{highlight_color}{word[2:-2]}{reset}')
        return f'{time} {color}{level_name}:{reset} {level_icon} {message.replace(level_name + ": ", "")}'


class PlainFormatter(logging.Formatter):
    """File output: same text as the console, highlight markers stripped."""

    def format(self, record):
        message = super().format(record)
        return message.replace('<<', '').replace('>>', '')


class CustomLogger:
    _loggers = {}

    def __new__(cls, log_level, logger_name, log_path=None):
        if logger_name not in cls._loggers:
            new_logger = super(CustomLogger, cls).__new__(cls)
            cls._loggers[logger_name] = new_logger
            return new_logger
        else:
            return cls._loggers[logger_name]

    def __init__(self, log_level, logger_name, log_path=None):
        if hasattr(self, 'is_initialized'):
            # Logger already initialized, just update the log level
            self.set_log_level(log_level)
            return

        self.logger = logging.getLogger(logger_name)
        self.logger.setLevel(LEVELS.get(log_level, logging.INFO))
        self.logger.propagate = False

        # stdout carries reports, so the console handler writes to stderr
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(ColoredFormatter('%(message)s'))
        self.logger.addHandler(console_handler)

        if log_path:
            file_handler = logging.FileHandler(log_path)
            file_handler.setFormatter(PlainFormatter('%(asctime)s %(levelname)s: %(message)s'))
            self.logger.addHandler(file_handler)

        self.is_initialized = True

    def set_log_level(self, log_level):
        level = LEVELS.get(log_level, logging.INFO)
        self.logger.setLevel(level)
        for handler in self.logger.handlers:
            handler.setLevel(level)
