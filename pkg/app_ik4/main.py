"""IK4 command-line entry point"""

import os
import sys

from dotenv import load_dotenv

# Add parent directory to path to import ik4_core
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from ik4_core.cli import main
from app_ik4.config import Config

# Load environment variables
load_dotenv()

if __name__ == '__main__':
    sys.exit(main(sys.argv[1:], Config))
