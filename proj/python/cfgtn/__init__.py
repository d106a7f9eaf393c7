"""Copula mixtures fitted by a log-barrier interior-point method."""

import json

from ._cfgtn import *  # noqa: F401,F403
from ._cfgtn import fit as _fit


def fit(u, max_k=8):
    """Stepwise fit; adds the decoded model under "model_dict"."""
    out = _fit(u, max_k)
    out["model_dict"] = json.loads(out["model"])
    return out
