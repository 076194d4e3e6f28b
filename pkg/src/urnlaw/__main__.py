import sys

from urnlaw.cli import main

sys.exit(main())
