import sys
from pathlib import Path

# make the tests/ helper modules (synth, oracles) importable from any cwd
sys.path.insert(0, str(Path(__file__).parent))
