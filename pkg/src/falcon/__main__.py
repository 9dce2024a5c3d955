"""Package entry point for ``python3 -m falcon``."""

from falcon.cli import main

main()
