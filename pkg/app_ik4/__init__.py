"""IK4 command-line and service package"""

__version__ = "0.1.0"
