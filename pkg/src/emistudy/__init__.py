"""emistudy: a study platform for mobile EMA/EMI trials.

Content pipeline: tab-delimited study workbooks compile into validated,
versioned questionnaire/quiz/feedback artifacts plus a seed manifest.
Service: enrollment with permuted-block arm randomization, module gating,
idempotent diary submission and intervention-action logging, hybrid
static/dynamic content delivery, threshold feedback and adherence statistics.
"""

__version__ = "0.1.0"
