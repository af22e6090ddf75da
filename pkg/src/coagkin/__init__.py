"""Self-similar coagulation kinetics for kernels K = 2 + eps W."""
__version__ = "0.1.0"
