"""Minimal neural-network core: layers with analytic gradients, a stacked
LSTM over the compiled kernels, the AMSGrad optimizer, finite-difference
gradient checking, and checkpoint serialization."""
