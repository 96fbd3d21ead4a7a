"""Allow ``python -m dcw``."""

import sys

from dcw._cli import main

sys.exit(main())
