from .cv import GridSearchResult, grid_search_cv, make_grouped_folds
from .models import (
    DEFAULT_GRIDS,
    FAMILIES,
    ClassifierSpec,
    FittedClassifier,
    fit_classifier,
)
from .tree import Tree, grow_tree

__all__ = [
    "GridSearchResult",
    "grid_search_cv",
    "make_grouped_folds",
    "DEFAULT_GRIDS",
    "FAMILIES",
    "ClassifierSpec",
    "FittedClassifier",
    "fit_classifier",
    "Tree",
    "grow_tree",
]
