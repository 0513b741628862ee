"""reviewqa: build subjectivity-labeled QA datasets from review corpora.

The pipeline runs: corpus ingest -> opinion extraction -> matrix
factorization -> neighborhood model -> topic selection -> annotation
tasks -> annotation service -> dataset assembly -> statistics -> QA
model training.  Each step is importable on its own; the `reviewqa`
command line ties them together.
"""

__version__ = "0.1.0"
