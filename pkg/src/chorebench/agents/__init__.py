from .commander import AgentConfig, RuleCommander
from .episode import EpisodeLimits, run_tatc_episode
from .follower import HELP_UTTERANCE, RuleFollower
from .planner import plan_path, plan_path_to_cell

__all__ = [
    "AgentConfig",
    "RuleCommander",
    "EpisodeLimits",
    "run_tatc_episode",
    "HELP_UTTERANCE",
    "RuleFollower",
    "plan_path",
    "plan_path_to_cell",
]
