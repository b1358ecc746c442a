"""Blinded human-rating service: task assignment, collection, export."""

from .service import create_app
from .store import METRIC_SCHEMAS, RatingStore, Study, StudyItem, load_study, save_study

__all__ = [
    "METRIC_SCHEMAS",
    "RatingStore",
    "Study",
    "StudyItem",
    "create_app",
    "load_study",
    "save_study",
]
