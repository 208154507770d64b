import sys

from gcssim.main import main

__all__ = []

if __name__ == '__main__':
    sys.exit(main())
