import sys

from popspec.cli import main

sys.exit(main())
