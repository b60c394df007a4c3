"""Topic-conditioned outlier detection for Android app metadata.

The package clusters app store descriptions into topics (a neural-topic
style pipeline built from scratch, plus LDA and k-means baselines) and
trains a one-class SVM per topic on binary sensitive-API-call vectors.
An app whose API usage falls outside its topic's learned boundary is
flagged as likely malware.
"""

__version__ = "0.1.0"
