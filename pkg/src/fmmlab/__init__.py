"""Flow-masked multimodal sparse adversarial attack laboratory.

A desk-scale white-box attack bench: a differentiable video-captioning
surrogate, dense optical flow for key-frame selection, sparse masked PGD
perturbations, caption-quality metrics, and a reproducible experiment
harness with CSV/JSON reporting.
"""

__version__ = "0.1.0"
