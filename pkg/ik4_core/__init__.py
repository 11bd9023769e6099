"""IK4 Core - semantics, decision procedure and proof checking for intuitionistic modal logic"""

__version__ = "0.1.0"
