import sys

from wssync.cli import main

sys.exit(main())
