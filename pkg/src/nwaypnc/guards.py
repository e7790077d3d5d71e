"""Size limits for the brute-force routines.

Every exhaustive scan in the toolkit checks its work size against a limit
before starting. ``PNC_GUARD_LIMIT`` in the environment replaces all
default limits with a single value.
"""

import os

from nwaypnc.errors import GuardExceeded

ENV_VAR = "PNC_GUARD_LIMIT"

ENUMERATION_LIMIT = 10**8
PAIR_SCAN_LIMIT = 10**8
ML_TUPLE_LIMIT = 10**7


def resolve_limit(default):
    raw = os.environ.get(ENV_VAR)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(float(raw))
    except ValueError as exc:
        raise GuardExceeded(f"{ENV_VAR}={raw!r} is not a number") from exc


def check(size, default, what):
    limit = resolve_limit(default)
    if size > limit:
        raise GuardExceeded(f"{what}: work size {size} exceeds guard limit {limit} (set {ENV_VAR} to override)")
