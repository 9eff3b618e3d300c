"""Host-language adapters for the native table-tool engine."""
