from mhd_shred.evaluation.metrics import (
    ParamMetrics,
    ReconstructionResult,
    aggregate_l2_error,
    evaluate_case,
    evaluate_param_estimation,
    flagged_frames,
    reconstruct_full_state,
    reconstruct_normalized,
    relative_l2_error,
    residual_field,
)
from mhd_shred.evaluation.report import CampaignReport, campaign_report, check_thresholds, summary_frame
