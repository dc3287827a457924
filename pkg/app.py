"""
KAN-Ehrenfest time-series toolkit - command-line application

Generates driven spin-chain datasets, trains Ehrenfest-penalized KANs and
writes R² reports. Run `python app.py --help` for the commands.
"""
import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
