import sys

from vnlab.cli import main

sys.exit(main())
