"""Relation classification on SemEval 2010 Task 8.

From-scratch CNN and RNN sentence classifiers (extended middle context,
connectionist bi-directional recurrences, ranking loss), their voting
ensemble, and the official-semantics macro-F1 scorer.
"""

__version__ = "0.1.0"

from .kernels import backend_name

__all__ = ["backend_name", "__version__"]
