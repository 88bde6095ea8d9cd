import os
import sys

# Make the shared test helpers (oracles.py, synth.py) importable.
sys.path.insert(0, os.path.dirname(__file__))
