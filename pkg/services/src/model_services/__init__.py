"""HTTP microservice for token/sentence embeddings and toxicity scores."""

__version__ = "0.1.0"
