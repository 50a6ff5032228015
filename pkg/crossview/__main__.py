import sys

from crossview.cli import main

sys.exit(main())
