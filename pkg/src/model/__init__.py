"""Package for the network representation, evaluation and serialization.

"""
