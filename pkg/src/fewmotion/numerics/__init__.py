from .tensor import Tensor, no_grad, grad_enabled, as_tensor, tracks_grad
from . import ops
from .ops import op_catalog
from .gradcheck import (GradReport, CheckCase, grad_check, grad_check_leaves,
                        run_catalog_checks)

__all__ = [
    "Tensor", "no_grad", "grad_enabled", "as_tensor", "tracks_grad", "ops",
    "op_catalog", "GradReport", "CheckCase", "grad_check", "grad_check_leaves",
    "run_catalog_checks",
]
