"""natrank: line-level code naturalness scoring and buggy-line ranking.

The package measures how "natural" each line of a Java file looks,
either to a masked-token prediction oracle or to an n-gram language
model, aggregates token scores to line scores, and ranks a file's
lines from most suspicious to least. Evaluation utilities compare
rankings against known buggy lines.
"""

__version__ = "0.1.0"
