import sys
from pathlib import Path

# test modules import helpers/oracles directly; keep that working no
# matter which directory pytest is invoked from
sys.path.insert(0, str(Path(__file__).parent))
