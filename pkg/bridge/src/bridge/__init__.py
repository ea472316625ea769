"""Model bridge: runs masked LMs to produce the scoring toolkit's
interchange files (PLL scores, QA span predictions, NLI labels)."""

from .config import BridgeConfig
from .exporters import export_nli_predictions, export_pll, export_qa_predictions

__version__ = "0.1.0"
