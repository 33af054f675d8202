#!/usr/bin/env python
"""Command-line utility for the lab's gen-data, train, eval and plot tasks."""

import sys


def main() -> None:
    """Run a lab command."""
    from modules.engine.interfaces.cli import main as run

    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
