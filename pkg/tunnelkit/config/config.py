"""
Configuration for the application
"""
import os
import logging

# Configure logging
LOG_LEVEL = os.getenv('TUNNELKIT_LOG_LEVEL', 'INFO').upper()
logging.basicConfig(level=LOG_LEVEL, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger('tunnelkit')

# Optional FFT backend availability
try:
    import pyfftw
    PYFFTW_AVAILABLE = True
except ImportError:
    PYFFTW_AVAILABLE = False

FFT_BACKEND = os.getenv('TUNNELKIT_FFT_BACKEND', 'scipy')

# Run output and parallelism
OUTPUT_DIR = os.getenv('TUNNELKIT_OUTPUT_DIR', 'runs')
THREADS = int(os.getenv('TUNNELKIT_THREADS', str(os.cpu_count() or 1)))

# Tool version recorded in run manifests
TOOL_VERSION = '0.3.0'

# Application settings
DEBUG = os.getenv('DEBUG', 'False') == 'True'
