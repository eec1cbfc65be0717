"""Package for loading, generating and splitting classification
datasets.

"""
