"""Desk-scale UAV vision-language navigation toolkit.

Fuzzy bearing hints, 99-bin action tokens with intrinsic landing, demonstration
curation, a tabular behavior-cloning policy and NE/SR/OSR/SPL evaluation, all run
closed-loop in a seeded kinematic simulator.
"""

__version__ = "0.1.0"
