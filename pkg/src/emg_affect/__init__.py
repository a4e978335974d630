"""Forearm-EMG affect classification: features, SVM, evaluation, service.

The package turns raw single-channel EMG recordings of typing sessions into
relaxed/angry predictions: rest-window trimming and slot partitioning
(``signals``), eight time-domain features (``features``), a from-scratch
RBF soft-margin SVM trained by SMO (``svm``, with a compiled core and pure
fallback in ``_smo``), wrapper feature selection (``selection``), the
evaluation harness (``evaluation``), text-file persistence (``dataio``),
a capture/streaming HTTP service (``service``), and a CLI (``cli``).
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
