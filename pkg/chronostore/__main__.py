import sys

from chronostore.cli import main

sys.exit(main())
