"""Run the overlap_ec command line with ``python -m overlap_ec``."""

import sys

from .cli import main

sys.exit(main())
