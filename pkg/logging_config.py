"""
Logging for mptzx runs: console on stderr, rotating run log and error log under the log directory
"""

import logging
import logging.config
import os
from collections import Counter
from typing import Any, Dict, Optional, Tuple

RUN_LOG = 'mptzx.log'
ERROR_LOG = 'errors.log'
REPEAT_WARNING = 10


def build_logging_config(log_dir: str, level: str) -> Dict[str, Any]:
    """dictConfig payload; stdout stays free for the command's JSON result"""
    return {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'detailed': {
                'format': '[%(asctime)s] %(levelname)s %(name)s:%(lineno)d %(processName)s: %(message)s',
                'datefmt': '%Y-%m-%d %H:%M:%S'
            },
            'short': {
                'format': '[%(asctime)s] %(levelname)s: %(message)s',
                'datefmt': '%H:%M:%S'
            },
        },
        'handlers': {
            'console': {
                'class': 'logging.StreamHandler',
                'level': level,
                'formatter': 'short',
                'stream': 'ext://sys.stderr'
            },
            'run_file': {
                'class': 'logging.handlers.RotatingFileHandler',
                'level': 'DEBUG',
                'formatter': 'detailed',
                'filename': os.path.join(log_dir, RUN_LOG),
                'maxBytes': 10 * 1024 * 1024,
                'backupCount': 5,
                'encoding': 'utf8'
            },
            'error_file': {
                'class': 'logging.handlers.RotatingFileHandler',
                'level': 'ERROR',
                'formatter': 'detailed',
                'filename': os.path.join(log_dir, ERROR_LOG),
                'maxBytes': 10 * 1024 * 1024,
                'backupCount': 3,
                'encoding': 'utf8'
            }
        },
        'loggers': {
            '': {
                'level': 'DEBUG',
                'handlers': ['console', 'run_file', 'error_file']
            },
            # pool start-up chatter
            'concurrent.futures': {
                'level': 'WARNING',
                'handlers': ['console'],
                'propagate': False
            }
        }
    }


def setup_logging(log_dir: str = 'logs', level: str = 'INFO') -> None:
    """Install the handlers; calling it again replaces them"""
    level = level.upper()
    try:
        os.makedirs(log_dir, exist_ok=True)
        logging.config.dictConfig(build_logging_config(log_dir, level))
        logging.getLogger(__name__).debug(f"Logging to {log_dir} (console level {level})")
    except (OSError, ValueError) as e:
        # unwritable log dir: keep going with console output only
        logging.basicConfig(level=getattr(logging, level, logging.INFO),
                            format='[%(asctime)s] %(levelname)s: %(message)s')
        logging.getLogger(__name__).warning(f"File logging disabled: {e}")


class ErrorTracker:
    """Counts failures per (experiment, error type) and flags repeats"""

    def __init__(self):
        self.logger = logging.getLogger(__name__)
        self.counts: Counter = Counter()

    def log_error(self, error: Exception, context: str = "", experiment: Optional[str] = None) -> None:
        key: Tuple[Optional[str], str] = (experiment, type(error).__name__)
        self.counts[key] += 1
        self.logger.error(f"{context}: {type(error).__name__}: {error} | experiment={experiment} "
                          f"| seen {self.counts[key]}x", exc_info=error)
        if self.counts[key] == REPEAT_WARNING:
            self.logger.critical(f"{key[1]} has now failed {REPEAT_WARNING} times in {experiment}")

    def summary(self) -> Dict[str, int]:
        return {f"{exp or '-'}:{name}": n for (exp, name), n in self.counts.most_common()}


error_tracker = ErrorTracker()


def log_performance(label: str, duration: float, success: bool = True) -> None:
    logging.getLogger(__name__).info(f"PERFORMANCE: {label} took {duration:.3f}s - "
                                     f"{'SUCCESS' if success else 'FAILED'}")


class ContextLogger:
    """Appends bound run context (experiment, seed, N, p, r) to every message"""

    def __init__(self, logger_name: str, context: Optional[Dict[str, Any]] = None):
        self.logger = logging.getLogger(logger_name)
        self.context = context or {}

    def bind(self, **extra: Any) -> 'ContextLogger':
        return ContextLogger(self.logger.name, {**self.context, **extra})

    def _with_context(self, message: str) -> str:
        if not self.context:
            return message
        return f"{message} | " + " ".join(f"{k}={v}" for k, v in self.context.items())

    def debug(self, message: str) -> None:
        self.logger.debug(self._with_context(message))

    def info(self, message: str) -> None:
        self.logger.info(self._with_context(message))

    def warning(self, message: str) -> None:
        self.logger.warning(self._with_context(message))

    def error(self, message: str, error: Optional[Exception] = None) -> None:
        if error is None:
            self.logger.error(self._with_context(message))
        else:
            error_tracker.log_error(error, self._with_context(message), self.context.get('experiment'))
