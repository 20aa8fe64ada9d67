import sys

from gmschauder.cli import main

sys.exit(main())
