import sys

from selertion.driver.cli import main

sys.exit(main())
