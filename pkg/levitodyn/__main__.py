import sys

from levitodyn.main import main

sys.exit(main())
