"""``python -m qmwf``: same as the ``qmwf`` console script."""

import sys

from qmwf.cli.run import main

sys.exit(main())
