"""Waves, geodesics and diffraction on cones.

Thin Python layer over the C++ core; see README.md for the experiment kinds.
"""

from ._conelab import *  # noqa: F401,F403
from ._conelab import __version__, ConicError  # noqa: F401


def run_text(text, origin="<python>"):
    """Run an experiment from config text; returns the in-memory result dict."""
    return run_experiment(Config.parse(text, origin))  # noqa: F405


def table_frame(result, name):
    """A table of `run_experiment` output as a dict of numpy columns."""
    t = result["tables"][name]
    return {c: t["rows"][:, i] for i, c in enumerate(t["columns"])}
