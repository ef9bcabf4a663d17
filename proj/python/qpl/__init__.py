"""Python front end for the quantized predictor feedback core."""

import json

from ._core import QplError, __version__, predict, quantize, run_cli
from ._core import gains_json as _gains_json
from ._core import simulate as _simulate

__all__ = ["QplError", "__version__", "gains", "predict", "quantize", "run_cli", "simulate"]


def gains(L, D, kappa0, M_sigma, sigma, b3, **design):
    """Gain ledger as a dict. Keyword arguments override the design defaults (use lam for lambda)."""
    return json.loads(_gains_json(L, D, kappa0, M_sigma, sigma, b3, **design))


def simulate(config):
    """Runs a scenario given as a dict (same schema as the JSON config files)."""
    out = _simulate(json.dumps(config))
    out["ledger"] = json.loads(out.pop("ledger_json"))
    out["report"] = json.loads(out.pop("report_json"))
    return out
