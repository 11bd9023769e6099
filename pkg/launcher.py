"""Launcher for the IK4 HTTP service"""

import logging
import os
import sys

from dotenv import load_dotenv
from werkzeug.serving import run_simple

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from ik4_core.app import create_app
from app_ik4.config import Config

load_dotenv()

logging.basicConfig(level=getattr(logging, str(Config.LOG_LEVEL).upper(), logging.INFO))

application = create_app(Config)

if __name__ == '__main__':
    port = int(os.environ.get('PORT', 5000))
    print(f"Starting {Config.APP_NAME}...")
    print(f"Default bound: {Config.DEFAULT_BOUND} (max {Config.MAX_BOUND})")
    print(f"Repair budget: {Config.REPAIR_BUDGET}")
    print(f"\nServer running on port {port}\n")

    run_simple('0.0.0.0', port, application, use_reloader=False, use_debugger=False)
