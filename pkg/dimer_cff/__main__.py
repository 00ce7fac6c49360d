"""`python -m dimer_cff` and the `dimer-cff` console script."""

import os
import sys
from typing import List, Optional

# DimerCFF.py lives next to the package in a source checkout
_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if _ROOT not in sys.path:
    sys.path.insert(0, _ROOT)

from DimerCFF import main as cli_main  # noqa: E402


def main(argv: Optional[List[str]] = None) -> None:
    """Run the command line; exits with the command's status."""
    cli_main(argv)


if __name__ == "__main__":
    main()
