"""dexlink: glove-driven dexterous teleoperation without the hardware.

Sensing emulation and calibration for a 21-DoF instrumented glove, fingertip
retargeting to a robot hand via damped-least-squares IK, a combined
haptic/force feedback policy, and a desk-scale contact simulator closed into
one control loop with recording, replay, and a WebSocket operator service.
"""

from importlib import resources

__version__ = "0.1.0"


def bundled_model_text(name: str) -> str:
    """Text of a bundled hand-description document, e.g. 'glove21'."""
    return resources.files(__package__).joinpath(f"models/{name}.hand.json").read_text(encoding="utf-8")


def bundled_scenario_text(name: str) -> str:
    """Text of a bundled scenario document, e.g. 'grasp_bottle'."""
    return resources.files(__package__).joinpath(f"scenarios/{name}.json").read_text(encoding="utf-8")
