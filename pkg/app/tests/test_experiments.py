"""
Test module for the trend helpers and check bookkeeping of the experiment runner.
"""

import logging

from app.services.experiments import (
    MASS_FLOOR,
    CommandOutcome,
    eps_tag,
    non_increasing,
    strictly_decreasing,
)

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def test_strictly_decreasing_with_noise_floor():
    assert strictly_decreasing([3.0, 2.0, 1.0])
    assert not strictly_decreasing([3.0, 3.0, 1.0])
    # once both values sit at the floor they count as converged
    assert strictly_decreasing([1e-3, 1e-9, 1e-13, 2e-13], MASS_FLOOR)
    assert not strictly_decreasing([1e-3, 1e-9, 1e-13, 2e-13])


def test_non_increasing_with_per_step_slack():
    jittery = [0.0142, 0.0121, 0.0186, 0.0036]
    assert not non_increasing(jittery)
    # a whole mesh width of slack hides the rise from 0.0121 to 0.0186
    assert non_increasing(jittery, 0.04)
    assert not non_increasing(jittery, [0.0025, 0.0025, 0.0025])
    assert non_increasing(jittery, [0.0, 0.007, 0.0])
    assert non_increasing([0.5])


def test_command_outcome():
    outcome = CommandOutcome("report")
    outcome.check("first", True)
    outcome.check("second", 0, "detail")
    assert [c.name for c in outcome.failed] == ["second"]
    assert outcome.checks[1].to_json() == {"name": "second", "passed": False, "detail": "detail"}
    assert eps_tag(0.05) == "eps0.05"
