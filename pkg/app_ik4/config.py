"""Configuration for the IK4 tools"""

import os

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(name)
    return int(value) if value not in (None, "") else default


def _env_bool(name: str, default: bool) -> bool:
    value = os.environ.get(name)
    if value in (None, ""):
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


class Config:
    # Branding
    APP_NAME = os.environ.get("IK4_APP_NAME", "IK4 Decision Service")

    # Countermodel search
    DEFAULT_BOUND = _env_int("IK4_DEFAULT_BOUND", 3)
    MAX_BOUND = _env_int("IK4_MAX_BOUND", 5)
    SEARCH_WORKERS = _env_int("IK4_SEARCH_WORKERS", 1)  # 1 = search in-process

    # Saturation
    REPAIR_BUDGET = _env_int("IK4_REPAIR_BUDGET", 100_000)
    CHECK_EACH_STEP = _env_bool("IK4_CHECK_EACH_STEP", False)
    NLT_EXPONENT_LIMIT = _env_int("IK4_NLT_EXPONENT_LIMIT", 1 << 24)

    # Output
    LOG_LEVEL = os.environ.get("IK4_LOG_LEVEL", "INFO")
    REPORT_MODE = os.environ.get("IK4_REPORT_MODE", "human")  # human | structured
