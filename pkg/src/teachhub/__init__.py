"""Teachable quiz-game agent hub.

A tutee agent that learns a quiz game from binary evaluative feedback, a
multi-session orchestrator with a wire protocol for touchscreen clients and a
robot backend, a parametric tutor simulator for closed-loop batches, and an
analysis toolkit for the behavioural metrics and the statistics that go with
them. Entry point: the ``hub-cli`` command.
"""

__version__ = "0.1.0"

from .games import GameSpec, builtin_body_parts, builtin_grammar, load_content_pack
from .learner import FeedbackSignal, LearnerConfig, QTable, greedy_accuracy

__all__ = [
    "__version__",
    "GameSpec",
    "builtin_body_parts",
    "builtin_grammar",
    "load_content_pack",
    "FeedbackSignal",
    "LearnerConfig",
    "QTable",
    "greedy_accuracy",
]
