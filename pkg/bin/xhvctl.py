#!/usr/bin/env python3

"""The module contains the command-line entry point of the XHV toolkit."""

import sys

from xhv.cli import main

if __name__ == '__main__':
    sys.exit(main())
