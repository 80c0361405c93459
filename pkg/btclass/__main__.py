import sys

from btclass.cli import main

sys.exit(main())
