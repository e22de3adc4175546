"""Retrieval-augmented QA workbench with a reference/judge/human evaluation stack."""

__version__ = "0.1.0"
