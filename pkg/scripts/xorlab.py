"""
Console entry point for xorlab
Runs one experiment command and exits with its status
"""

import logging
import sys

from xorlab import cli

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def main():
    """Dispatch to the xorlab command line"""
    logger.debug("🚀 Starting xorlab...")
    sys.exit(cli.main())


if __name__ == "__main__":
    main()
