"""Instance I/O, generators, experiment runner, and the privacy audit driver."""

from conedp.harness.instances import load_instance, save_instance
from conedp.harness.generators import generate_covering_sdp, generate_feasible_scp
from conedp.harness.runner import RunRecord, run_experiment
from conedp.harness.audit import AuditReport, privacy_audit

__all__ = [
    "load_instance",
    "save_instance",
    "generate_covering_sdp",
    "generate_feasible_scp",
    "RunRecord",
    "run_experiment",
    "AuditReport",
    "privacy_audit",
]
