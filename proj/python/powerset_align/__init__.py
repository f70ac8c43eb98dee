"""Exact powerset aggregation, NLA approximations and alignment losses."""

from ._core import (
    DEFAULT_MASK_CAP,
    Batch,
    CapExceeded,
    ParseError,
    clip_loss,
    exact,
    exact_cell,
    generate_batch,
    lambda_bound,
    log_exponential_sum,
    nla,
    nla_t1_cell,
    nla_t2_cell,
    normalize_tree,
    phi_gamma,
    triplet_loss,
    verify,
)

__all__ = [
    "DEFAULT_MASK_CAP",
    "Batch",
    "CapExceeded",
    "ParseError",
    "clip_loss",
    "exact",
    "exact_cell",
    "generate_batch",
    "lambda_bound",
    "log_exponential_sum",
    "nla",
    "nla_t1_cell",
    "nla_t2_cell",
    "normalize_tree",
    "phi_gamma",
    "triplet_loss",
    "verify",
]
