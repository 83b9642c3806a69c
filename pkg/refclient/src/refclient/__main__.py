import sys

from .client import serve

if __name__ == "__main__":
    sys.exit(serve())
