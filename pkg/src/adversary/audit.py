# src/adversary/audit.py
from typing import Iterable, Optional, Set

from src.models.models import AuditSummary
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _explained_by_ground_truth(transcript, corrupted: Set[int]) -> Set[int]:
    explained = set(corrupted)
    for event in transcript.injections:
        explained.add(int(event["target_node"]))
        if event.get("level") == 2:
            explained.add(int(event["block"]) + 1)
    for event in transcript.of_kind("lie"):
        explained.add(int(event["node"]))
    return explained


def ground_truth_audit(transcript, corrupted: Iterable[int], cheaters=None) -> AuditSummary:
    """
    Compares the apparent cheaters against the hidden injection log.

    A node in B is explainable when it is corrupted, held a share that was
    tampered with, or re-encoded a block that was. A source that blamed
    more than t nodes at once (a caught dealer, an unreadable word) is
    explained as a whole when any tampering happened at all.

    Args:
        transcript: the run's Transcript.
        corrupted: the adversary's node ids.
        cheaters: the run's CheaterSets; B falls back to the last b_update event.

    Returns:
        AuditSummary; `clean` holds when nothing in B is unexplained.
    """
    corrupted = {int(c) for c in corrupted}
    if cheaters is not None:
        apparent = set(cheaters.B)
    else:
        history = transcript.b_history()
        apparent = set(history[-1]) if history else set()

    explained = _explained_by_ground_truth(transcript, corrupted)
    tampered = bool(transcript.injections or transcript.of_kind("lie"))
    if tampered and cheaters is not None:
        for nodes in cheaters.contributions.values():
            if len(nodes) > cheaters.t:
                explained |= nodes

    unexplained = sorted(apparent - explained)
    if unexplained:
        logger.warning(f"Audit: apparent cheaters {unexplained} match no injection")
    return AuditSummary(
        apparent=sorted(apparent),
        corrupted=sorted(corrupted),
        explainable=sorted(explained & apparent),
        unexplained=unexplained,
        honest_in_b=sorted(apparent - corrupted),
        injections=len(transcript.injections),
        clean=not unexplained,
    )
