"""
compatibility functions for different Python versions
"""

# Copyright (C) 2022 The CommCSL Team

import sys

if sys.version_info >= (3, 8):
    from typing import Protocol
else:
    from typing_extensions import Protocol

if sys.version_info >= (3, 9):
    from collections import deque as Deque
else:
    from typing import Deque

__all__ = [
    "Deque",
    "Protocol",
]
