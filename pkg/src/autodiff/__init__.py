"""Package for reverse-mode differentiation of losses over networks and
their interval bounds.

"""
