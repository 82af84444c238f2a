import sys

from gbslab.cli import main

sys.exit(main())
