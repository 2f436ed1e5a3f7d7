"""Allow ``python -m robustshadows`` as an alias for the console script."""

from .cli import main

main()
