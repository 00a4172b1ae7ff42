import logging
from settings import LOG_LEVEL

LOG_LEVELS = {
    "error": logging.ERROR,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

logger = logging.getLogger("reactor")
logger.setLevel(LOG_LEVELS.get(LOG_LEVEL.lower(), logging.ERROR))
if not logger.handlers:
    _handler = logging.StreamHandler()
    _handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
    logger.addHandler(_handler)
