import sys

from api.cli_commands import main

if __name__ == "__main__":
    sys.exit(main())
