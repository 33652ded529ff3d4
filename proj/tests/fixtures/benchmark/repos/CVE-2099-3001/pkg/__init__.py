from .archive import extract_all, list_names

__all__ = ["extract_all", "list_names"]
