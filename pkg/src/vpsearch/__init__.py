"""vpsearch: autonomous discovery of task-wise visual prompts.

A search engine that explores an abstract idea space with a
novelty-guided selection rule, compiles ideas into validated
image-manipulation pipelines, measures them on a small development set,
and feeds distilled findings back into future idea generation.
"""

from vpsearch.config import ExplorationConfig, load_config
from vpsearch.engine import ExplorationEngine, RunReport, run_inference
from vpsearch.gateway import GatewayClient, HttpBackend, Ledger, ScriptedBackend
from vpsearch.ideation import SelfEvaluation
from vpsearch.program import VisualPromptProgram, identity_program, validate_program
from vpsearch.records import ExperimentRecord, SampleResult, TokenUsage
from vpsearch.selection import priority_executed, priority_unexecuted, select_node
from vpsearch.simulator import SyntheticLandscape, default_landscape, simulate_reward
from vpsearch.tree import ExplorationTree, IdeaNode, create_root

__version__ = "0.1.0"

__all__ = [
    "ExplorationConfig",
    "ExplorationEngine",
    "ExplorationTree",
    "ExperimentRecord",
    "GatewayClient",
    "HttpBackend",
    "IdeaNode",
    "Ledger",
    "RunReport",
    "SampleResult",
    "ScriptedBackend",
    "SelfEvaluation",
    "SyntheticLandscape",
    "TokenUsage",
    "VisualPromptProgram",
    "create_root",
    "default_landscape",
    "identity_program",
    "load_config",
    "priority_executed",
    "priority_unexecuted",
    "run_inference",
    "select_node",
    "simulate_reward",
    "validate_program",
]
