"""
relcull Package
Scene-graph curation: prunes predicates that label embeddings and box geometry alone can predict
"""

__version__ = "0.1.0"
__description__ = "Scene-graph predicate curation with a visual discriminator"
