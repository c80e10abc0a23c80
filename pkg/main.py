"""
Run the selection toolkit from the command line.

    python main.py <command> [options]
"""
import os
import sys

# Make the modules importable
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

# config loads .env.selection / .env on import
import config  # noqa: F401,E402
from cli import cli  # noqa: E402

if __name__ == "__main__":
    cli(prog_name="selection")
