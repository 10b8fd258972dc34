import logging
import sys

from bifi.cli import main
from bifi.config import settings

logging.basicConfig(level=settings.LOG_LEVEL, format='%(message)s')


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
