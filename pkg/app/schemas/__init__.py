from app.schemas.report import IngestReport, MetricsReport, MetricsSummary, RankRecord, RejectedLine
from app.schemas.training import HistoryRecord, TrainConfig, TrainHistory
from app.schemas.query import IncompleteTriple, Prediction, QueryResult, SupportingTriple

__all__ = [
    "IngestReport",
    "RejectedLine",
    "MetricsReport",
    "MetricsSummary",
    "RankRecord",
    "TrainConfig",
    "TrainHistory",
    "HistoryRecord",
    "IncompleteTriple",
    "Prediction",
    "SupportingTriple",
    "QueryResult",
]
