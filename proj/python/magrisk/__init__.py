"""Deterministic multi-agent failure-mode simulation and risk metrics."""

try:
    from . import _magrisk as _impl  # wheel layout: extension inside the package
except ImportError:  # build-tree layout: extension on PYTHONPATH
    import _magrisk as _impl

apply_safety_factor = _impl.apply_safety_factor
cascade_stats = _impl.cascade_stats
classify = _impl.classify
cooperation_index = _impl.cooperation_index
disagreement_rate = _impl.disagreement_rate
load_scenario = _impl.load_scenario
pareto_frontier = _impl.pareto_frontier
pairwise_similarity = _impl.pairwise_similarity
probe_agent = _impl.probe_agent
replay_check = _impl.replay_check
response_entropy = _impl.response_entropy
run_ensemble = _impl.run_ensemble
run_once = _impl.run_once
scenario_names = _impl.scenario_names
sweep = _impl.sweep
tom_score = _impl.tom_score
trace_digest = _impl.trace_digest
validate = _impl.validate

__all__ = [
    "apply_safety_factor",
    "cascade_stats",
    "classify",
    "cooperation_index",
    "disagreement_rate",
    "load_scenario",
    "pareto_frontier",
    "pairwise_similarity",
    "probe_agent",
    "replay_check",
    "response_entropy",
    "run_ensemble",
    "run_once",
    "scenario_names",
    "sweep",
    "tom_score",
    "trace_digest",
    "validate",
]
