#!/usr/bin/env python3
"""
Module entry point for fastsketch.

Enables execution via: python -m fastsketch
"""

from fastsketch.main import main

if __name__ == "__main__":
    raise SystemExit(main())
