"""Standards-consultation question answering.

Pipeline: character/lexicon tokenization (``textcore``), a float64 numeric
core with hand-written gradients (``nncore``), sentence-pair similarity with
interactive attention (``simnet``), BiLSTM-CRF entity tagging
(``nertagger``), template question generation (``qgen``), a file-backed
knowledge library with similarity retrieval (``kb``), and an HTTP/CLI
serving layer (``service``, ``cli``).
"""

__version__ = "0.1.0"
