"""Package for sound bounds on pre-activations and outputs under
perturbations of the input in the infinity norm.

"""
