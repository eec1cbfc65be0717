"""Package for scoring, selecting and grafting unstable neurons.

"""
