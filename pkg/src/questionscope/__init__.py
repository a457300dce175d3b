"""Corpus-scale analysis of interrogative stances in French-language news.

Submodules follow the processing pipeline: corpus ingestion and
segmentation, candidate detection, pseudo-labeling and inference,
answer-span search, entity annotation, index computation, and
triangulation against human gold annotations.
"""

__version__ = "0.1.0"
