"""
XorLab - single-neuron PReLU, GCU and tanh-MLP experiments on the XOR problem.
"""

__version__ = "0.1.0"
