import sys

from cped.cli import main

sys.exit(main())
