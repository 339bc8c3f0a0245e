"""Bayesian conditional independence tests and PC structure learning for discrete data."""

from pathlib import Path

from ._core import (
    BifParseError,
    CsvError,
    DegenerateInput,
    bayes_factor,
    chi2_sf,
    ci_test,
    digamma,
    discover,
    estimate_alpha,
    ln_gamma,
    log_polya,
    mi_eb,
    mi_mle,
    network_shape,
    oracle_shd,
    sample_bif,
    theta_tilde,
)

NETWORK_DIR = Path(__file__).parent / "networks"
if not NETWORK_DIR.is_dir():
    # editable install: the package is served from the source tree
    NETWORK_DIR = Path(__file__).resolve().parents[2] / "data" / "networks"


def load_network(name):
    """Returns the BIF text of a bundled network, e.g. load_network("child")."""
    return (NETWORK_DIR / f"{name}.bif").read_text()
