"""Default numerical tolerances.

Each default can be overridden through an environment variable, read once
at import time:

=============================  ===========================  =========
variable                       meaning                      default
=============================  ===========================  =========
``FREEJACOBI_ROOT_TOL``        root residuals               1e-12
``FREEJACOBI_INVERSE_TOL``     inversion residual           1e-10
``FREEJACOBI_IDENTITY_TOL``    identity checks              1e-10
``FREEJACOBI_DOMAIN_STEPS``    segment steps for membership 10000
=============================  ===========================  =========
"""

import os
from dataclasses import dataclass


def _env_float(name, default):
    raw = os.environ.get(name)
    return default if raw is None else float(raw)


@dataclass(frozen=True)
class Tolerances:
    root: float = 1e-12
    inverse: float = 1e-10
    identity: float = 1e-10
    domain_steps: int = 10_000

    @classmethod
    def from_env(cls):
        return cls(
            root=_env_float("FREEJACOBI_ROOT_TOL", cls.root),
            inverse=_env_float("FREEJACOBI_INVERSE_TOL", cls.inverse),
            identity=_env_float("FREEJACOBI_IDENTITY_TOL", cls.identity),
            domain_steps=int(_env_float("FREEJACOBI_DOMAIN_STEPS", cls.domain_steps)),
        )


TOL = Tolerances.from_env()
