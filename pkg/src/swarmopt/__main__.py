import sys

from swarmopt.cli import main

sys.exit(main())
