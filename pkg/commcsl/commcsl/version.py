"""
commcsl distribution version file.
"""

# Copyright (C) 2022 The CommCSL Team

# Use a versioning scheme as defined in
# https://www.python.org/dev/peps/pep-0440/
__version__ = "0.3.0"
