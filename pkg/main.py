"""
QMWF-LM - command-line entry

This is a thin wrapper around qmwf.cli.run.
Run with: python main.py verify

Or after installing: qmwf verify
"""

import sys

from qmwf.cli.run import main

if __name__ == "__main__":
    sys.exit(main())
