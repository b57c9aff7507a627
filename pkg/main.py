# main.py
# Entry point: ``python main.py count bounded-affine --upto 5``.
import sys

from app.cli import main

if __name__ == "__main__":
    sys.exit(main())
