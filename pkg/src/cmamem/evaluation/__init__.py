"""Behavioral probes, rubric judge, statistics and the study harness."""

from .harness import StudyReport, check_criteria, per_query_csv, reports_json, run_study, summary_table
from .judge import RubricJudge, Verdict, VerdictLabel
from .probes import STUDIES, ProbeQuery, ProbeRecord, ProbeScenario, generate
from .stats import cohens_d, cohens_h, mcnemar, permutation_test

__all__ = [
    "STUDIES", "ProbeQuery", "ProbeRecord", "ProbeScenario", "RubricJudge", "StudyReport",
    "Verdict", "VerdictLabel", "check_criteria", "cohens_d", "cohens_h", "generate",
    "mcnemar", "per_query_csv", "permutation_test", "reports_json", "run_study", "summary_table",
]
