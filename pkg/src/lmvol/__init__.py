"""Long-memory Black-Scholes volatility: kernels, moments, autocovariance,
Monte Carlo paths and the discrete-time analogue."""

__version__ = "0.1.0"
