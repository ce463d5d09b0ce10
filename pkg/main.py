#!/usr/bin/python3 -tt
# Project: flowcit_lab
# Filename: main.py
import sys

from cli import main


if __name__ == "__main__":
    sys.exit(main())
