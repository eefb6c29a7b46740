import logging.config

LOG_FORMAT = (
    "[%(asctime)s] {%(module)s:%(filename)s:%(funcName)s:%(lineno)d}"
    " %(levelname)s - %(message)s"
)


def build_logger_config(log_level="INFO", log_location=None):
    """
    Builds the `dictConfig` schema used by the command line tool. Records always go to
    stderr so CSV and JSON written to stdout stay clean; a rotating log file is added
    when a location is configured.

    :param log_level: Level name applied to the root logger and its handlers
    :type log_level: :class:`str`
    :param log_location: Optional path of the rotating log file
    :type log_location: :class:`str`
    :return: Logging config dictionary
    """
    handlers = {
        "console": {
            "level": log_level,
            "formatter": "default",
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
        },
    }
    if log_location:
        handlers["file"] = {
            "level": log_level,
            "formatter": "default",
            "class": "logging.handlers.RotatingFileHandler",
            "filename": log_location,
            "maxBytes": 5000000,
            "backupCount": 10,
        }

    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {"default": {"format": LOG_FORMAT}},
        "handlers": handlers,
        "root": {"level": log_level, "handlers": list(handlers)},
    }


def setup_logger(log_level="INFO", log_location=None):
    logging.config.dictConfig(build_logger_config(log_level, log_location))
