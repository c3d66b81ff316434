#!/usr/bin/env python3
"""
geoquant - Entry Point

Bayesian geoadditive quantile regression from the command line.
"""

import sys

from geoquant.cli import main


if __name__ == "__main__":
  sys.exit(main())
