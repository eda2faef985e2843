import logging
import json
import threading
import os
from datetime import datetime

# Package logger; services log through logging.getLogger(__name__) and reach
# the same root handlers
logger = logging.getLogger('QsiSet')

# Create formatters
detailed_formatter = logging.Formatter(
    '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)

# Handlers are created by setup_logging(); library use keeps logging's defaults
console_handler = None
file_handler = None
_log_dir = None

# =============================================================================
# Dynamic Logging Control
# =============================================================================

# Log level mapping
LOG_LEVELS = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'ERROR': logging.ERROR,
    'CRITICAL': logging.CRITICAL
}

DEFAULT_CONSOLE_LEVEL = 'INFO'

# Feature-specific debug flags - verbose logging for one subsystem at a time
DEBUG_FLAGS = {
    'enumeration': False,   # Superlevel traversal and best-first search
    'histogram': False,     # Level-histogram dynamic program
    'ehrhart': False,       # Period escalation and fits
    'tails': False,         # Remainder levels and shell sums
    'estimates': False,     # Regime checks in the bound evaluators
    'volume': False,        # Lattice-scaling ladder
    'cli': False,           # Row scheduling and output
}

# Lock for thread-safe access to debug flags
_debug_flags_lock = threading.Lock()
_events_lock = threading.Lock()


def setup_logging(console_level: str = DEFAULT_CONSOLE_LEVEL, log_dir: str = None) -> str:
    """
    Configure root handlers for a command-line run.

    Args:
        console_level: Level name for the stderr handler
        log_dir: Directory for qsiset.log and run_events.json; None keeps file logging off

    Returns:
        The log directory in use, or None
    """
    global console_handler, file_handler, _log_dir

    # Clear any auto-configured handlers from the root logger
    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        if handler is file_handler:
            handler.close()
    root_logger.setLevel(logging.DEBUG)  # Allow all through, handlers decide

    # Console handler on stderr so CSV on stdout stays clean
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(detailed_formatter)
    root_logger.addHandler(console_handler)
    if not set_console_log_level(console_level):
        set_console_log_level(DEFAULT_CONSOLE_LEVEL)

    file_handler = None
    _log_dir = None
    if log_dir is None:
        return None

    os.makedirs(log_dir, exist_ok=True)

    # File handler for all logs with UTF-8 encoding
    file_handler = logging.FileHandler(os.path.join(log_dir, 'qsiset.log'), encoding='utf-8')
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(detailed_formatter)
    root_logger.addHandler(file_handler)
    _log_dir = log_dir
    return log_dir


def get_console_log_level() -> str:
    """Get current console log level as string"""
    if console_handler is None:
        return DEFAULT_CONSOLE_LEVEL
    level = console_handler.level
    for name, value in LOG_LEVELS.items():
        if value == level:
            return name
    return DEFAULT_CONSOLE_LEVEL


def set_console_log_level(level: str) -> bool:
    """Set console log level. Returns True if successful."""
    level = level.upper()
    if level not in LOG_LEVELS or console_handler is None:
        return False

    console_handler.setLevel(LOG_LEVELS[level])
    logger.debug(f"Console log level changed to {level}")
    return True


def get_debug_flags() -> dict:
    """Get current debug flags"""
    with _debug_flags_lock:
        return DEBUG_FLAGS.copy()


def set_debug_flag(flag: str, enabled: bool) -> bool:
    """Set a specific debug flag. Returns True if flag exists."""
    with _debug_flags_lock:
        if flag not in DEBUG_FLAGS:
            return False
        DEBUG_FLAGS[flag] = enabled
    logger.debug(f"Debug flag '{flag}' set to {enabled}")
    return True


def is_debug_enabled(flag: str) -> bool:
    """Check if a specific debug flag is enabled"""
    with _debug_flags_lock:
        return DEBUG_FLAGS.get(flag, False)


def debug_log(flag: str, message: str, level: str = 'debug'):
    """
    Log a message only if the specified debug flag is enabled.

    Args:
        flag: Debug flag name (e.g., 'enumeration', 'ehrhart')
        message: The message to log
        level: Log level ('debug', 'info', 'warning', 'error')
    """
    if not is_debug_enabled(flag):
        return

    prefixed_message = f"[{flag.upper()}] {message}"

    if level == 'error':
        logger.error(prefixed_message)
    elif level == 'warning':
        logger.warning(prefixed_message)
    elif level == 'info':
        logger.info(prefixed_message)
    else:
        logger.debug(prefixed_message)


def get_logging_config() -> dict:
    """Get full logging configuration"""
    return {
        'console_level': get_console_log_level(),
        'file_logging': _log_dir is not None,
        'log_dir': _log_dir,
        'debug_flags': get_debug_flags(),
        'available_levels': list(LOG_LEVELS.keys()),
        'available_flags': list(DEBUG_FLAGS.keys())
    }


def log_run_event(event_type, details):
    """Log a command run event as one JSON line next to qsiset.log"""
    event = {
        "timestamp": datetime.now().isoformat(),
        "event_type": event_type,
        "thread": threading.current_thread().name,
        "details": details
    }

    if _log_dir is not None:
        events_file = os.path.join(_log_dir, 'run_events.json')
        with _events_lock:
            with open(events_file, 'a', encoding='utf-8') as f:
                f.write(json.dumps(event, default=str) + '\n')

    logger.info(f"RUN EVENT: {event_type} - {details}")
