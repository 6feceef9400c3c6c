"""
Command-line entry point
"""
import sys

from tunnelkit.harness.cli import main

if __name__ == '__main__':
    sys.exit(main())
