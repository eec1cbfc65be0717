"""Package for Lipschitz-aware linearity grafting and certification.

"""
MODEL_FORMAT_VERSION = 1
"""Version of the model and graft set JSON formats."""
