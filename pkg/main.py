"""
KineticLimitLab - spectral simulator and hydrodynamic-limit harness
Main Entry Point with Logging
"""
import sys
import logging
from logging.handlers import RotatingFileHandler
from datetime import datetime

from config.settings import (
    APP_NAME,
    APP_VERSION,
    LOG_FILE_BACKUP_COUNT,
    LOG_FILE_MAX_BYTES,
    LOG_FORMAT,
    LOG_LEVEL,
    LOGS_DIR,
)


def setup_logging(level=None):
    """
    Configure application logging
    Creates both file and console handlers
    """
    level = level or LOG_LEVEL
    LOGS_DIR.mkdir(parents=True, exist_ok=True)

    logger = logging.getLogger()
    logger.setLevel(getattr(logging, level))
    logger.handlers = []

    # File handler - rotating log file
    log_file = LOGS_DIR / f"kll_{datetime.now().strftime('%Y%m%d')}.log"
    file_handler = RotatingFileHandler(
        log_file,
        maxBytes=LOG_FILE_MAX_BYTES,
        backupCount=LOG_FILE_BACKUP_COUNT,
        encoding='utf-8'
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))

    # Console handler - progress and results
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)

    logger.info("=" * 60)
    logger.info(f"{APP_NAME} v{APP_VERSION} - Started")
    logger.info(f"Log file: {log_file}")
    logger.info(f"Log level: {level}")
    logger.info("=" * 60)

    return logger


def main(argv=None):
    """Main entry point; returns the process exit code"""
    logger = setup_logging()

    try:
        from cli import run_cli

        return run_cli(argv)
    except Exception as e:
        logger.critical(f"Fatal error: {e}", exc_info=True)
        raise
    finally:
        logger.info("Shutting down")
        logger.info("=" * 60)


if __name__ == "__main__":
    sys.exit(main())
