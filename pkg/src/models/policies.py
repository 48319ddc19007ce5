from enum import Enum


class PolicyKind(str, Enum):
    """
    Enumeration of exit policy kinds.

    - ``multihop`` : Multi-hop controller, stride chosen from the current score.
    - ``fullscan`` : Check every layer from the start layer (brute-force oracle).
    - ``fixed`` : Always exit at one fixed depth.
    - ``noexit`` : Vanilla inference, final layer only, no checks.
    """

    multihop = "multihop"
    fullscan = "fullscan"
    fixed = "fixed"
    noexit = "noexit"


class MetricKind(str, Enum):
    """
    Enumeration of dissimilarity metrics driving the exit predicate.

    - ``mean_l2`` : Mean point-wise L2 distance over the whole horizon.
    - ``l2_at`` : L2 distance at a single horizon (e.g. 2 s).
    """

    mean_l2 = "mean_l2"
    l2_at = "l2_at"
