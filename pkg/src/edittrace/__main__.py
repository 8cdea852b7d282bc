import sys

from edittrace.cli import main

sys.exit(main())
