"""Evenly spaced measurement grids.

Sweep execution and dataset reconstruction must agree on sweep coordinates to
the last bit, so both sides call this one function instead of computing their
own spacing.
"""

from __future__ import annotations

from falcon.core.types import InvariantViolation


def sweep_grid(start: float, stop: float, num_steps: int) -> tuple[float, ...]:
    """Return ``num_steps`` evenly spaced doubles from start to stop inclusive.

    Both endpoints are exact; interior points are ``start + i * step`` in
    IEEE-754 double arithmetic, which makes the result reproducible across
    processes.
    """
    if num_steps < 2:
        raise InvariantViolation("a sweep grid needs at least 2 steps")
    step = (stop - start) / (num_steps - 1)
    values = [start + i * step for i in range(num_steps)]
    values[-1] = stop
    return tuple(values)
