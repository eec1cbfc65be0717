"""Package for certifying the robustness of single samples and whole
evaluation sets.

"""
