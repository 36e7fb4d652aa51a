"""lexcomp: a lexical complexity prediction workbench.

Builds annotation corpora from pre-tagged text, extracts psycholinguistic
feature vectors, collects and aggregates crowd Likert judgments, and trains
and evaluates continuous and categorical complexity predictors.
"""

__version__ = "0.1.0"
