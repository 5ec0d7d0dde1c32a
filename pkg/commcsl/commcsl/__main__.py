"""
Run the command line front end: ``python -m commcsl``.
"""

# Copyright (C) 2022 The CommCSL Team

import sys

from .cli import main

sys.exit(main())
