"""Carrot Cure: carrot disease classification built from first principles.

A from-scratch convolutional network engine (NHWC, same-padded 3x3
convolutions, exact backward passes), an image preprocessing and
augmentation pipeline, a five-architecture comparison harness, an
evaluation-metric suite, and an HTTP diagnosis service that pairs each
prediction with bilingual cure guidance.
"""

__version__ = "0.1.0"
