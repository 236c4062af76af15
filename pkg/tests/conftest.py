"""
Shared test setup: the consistency checks run throughout the suite.
"""

import os

os.environ.setdefault("EQUICUBE_CHECK_INVARIANTS", "1")
