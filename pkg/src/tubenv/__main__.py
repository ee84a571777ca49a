import sys

from tubenv.cli import main

sys.exit(main())
