"""Bundled example models.

synthetic4        four-variable toy network (DAG, covariance and the single
                  CI statement it induces)
cachexia          six-metabolite covariance estimated from cachexia patients
cachexia_control  same metabolites for the control group, with the three
                  marginal independences its exact zeros encode
"""

from pathlib import Path

FIXTURES = ("synthetic4", "cachexia", "cachexia_control")

_HERE = Path(__file__).parent


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled model file."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return _HERE / f"{name}.json"
