"""topseg: paragraph-level text segmentation via supervised same-topic prediction.

Pipeline modules: extract (HTML -> documents), corpus (data model + splits),
topics (alias-based labeling), sampling (pair generation), scorers (pairwise
models), inference (sequential segmentation + ensembling), metrics (P_k /
acc_k), cli (orchestration).
"""

__version__ = "0.1.0"
