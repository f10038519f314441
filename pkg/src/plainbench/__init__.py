"""Plain-language adaptation workbench for biomedical abstracts.

Pipeline pieces: corpus ingestion and grouped splitting, prompt-driven
adaptation strategies over a chat-completions gateway, fine-tune dataset
export, readability scoring (Flesch-Kincaid grade, SMOG), paired statistics,
Likert/TREC aggregation, and a blinded human rating service.
"""

__version__ = "0.1.0"
