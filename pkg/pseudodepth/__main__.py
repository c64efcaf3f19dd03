"""Allow `python -m pseudodepth`."""

import sys

from pseudodepth.cli import main

if __name__ == "__main__":
    sys.exit(main())
