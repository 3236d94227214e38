"""Pairwise max-margin ranking loss."""


def pairwise_hinge_loss(s_pos: float, s_neg: float, margin: float = 0.5) -> float:
    """max(0, margin − s_pos + s_neg)."""
    return max(0.0, margin - s_pos + s_neg)


def hinge_grad(s_pos: float, s_neg: float, margin: float = 0.5) -> tuple[float, float]:
    """
    Subgradient of the hinge w.r.t. (s_pos, s_neg).

    Zero at the kink, where the loss is exactly 0.
    """
    if margin - s_pos + s_neg > 0.0:
        return -1.0, 1.0
    return 0.0, 0.0
