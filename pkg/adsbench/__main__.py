import sys

from adsbench.cli import main

sys.exit(main())
