import logging

import psutil

__all__ = ["get_n_cores"]

logger = logging.getLogger(__name__)


def get_n_cores() -> int:
    """
    :return: The number of physical cores, or the logical count where psutil cannot tell them apart.
    """
    n = psutil.cpu_count(logical=False) or psutil.cpu_count(logical=True) or 1
    logger.debug("Detected %d cores", n)
    return n
