"""
Data handling: MNIST IDX reading, network and model files, table export.
"""
