"""Campaign orchestration: configuration, per-bit checks, classification, reports, CLI."""

from .build import Target, build_target, load_property_file
from .config import CampaignConfig, ConfigError, config_from_dict, desk_config, load_config
from .diff import Agreement, compare, compare_report
from .report import read_bits_csv, summary_dict, summary_text, write_report
from .run import (
    SAFE,
    UNDETERMINED,
    VULNERABLE,
    BitClassification,
    CampaignError,
    Report,
    VerdictCache,
    VerdictRecord,
    classify,
    rank_bits,
    run_campaign,
    run_property,
)

__all__ = [
    "Agreement", "BitClassification", "CampaignConfig", "CampaignError", "ConfigError", "Report", "SAFE",
    "Target", "UNDETERMINED", "VULNERABLE", "VerdictCache", "VerdictRecord", "build_target", "classify",
    "compare", "compare_report", "config_from_dict", "desk_config", "load_config", "load_property_file",
    "rank_bits", "read_bits_csv", "run_campaign", "run_property", "summary_dict", "summary_text",
    "write_report",
]
