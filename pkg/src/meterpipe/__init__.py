"""Small pipe-composable stream tools for smart-meter reading batches."""

__version__ = "0.1.0"
