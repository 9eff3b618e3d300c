"""tabpilot: phase-gated multi-agent driver for tabular competition workspaces."""

__version__ = "0.1.0"
