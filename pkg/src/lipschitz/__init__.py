"""Package for upper and lower estimates of local Lipschitz constants in
the infinity norm.

"""
