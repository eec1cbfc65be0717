"""Package for adversarial training, fine-tuning and pruning.

"""
