"""Reference adapters serving models over the longscribe wire protocol."""

__version__ = "0.1.0"
