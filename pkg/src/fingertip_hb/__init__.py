"""Noninvasive hemoglobin estimation from fingertip-video HSV histograms.

Pipeline: RGB frames -> HSV -> 256-bin H, S, V histograms averaged over an
analysis window -> 768-feature vector per video -> standardized feature
matrix -> PLS1 regression evaluated by seeded k-fold cross-validation.
"""

__version__ = "0.1.0"
