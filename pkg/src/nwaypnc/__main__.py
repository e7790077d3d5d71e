import sys

from nwaypnc.cli import main

sys.exit(main())
