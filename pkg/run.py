import subprocess
import sys
from logger import info_logger, error_logger


# Validate the analytic engine against the bundled reference table, then start the web API
validate_command = [sys.executable, '-m', 'dds_latency.cli', 'validate']
server_script = 'server.py'

result = subprocess.run(validate_command)
if result.returncode != 0:
    error_logger.error(f"Reference validation exited with {result.returncode}")

subprocess.run([sys.executable, server_script], check=True)

info_logger.info("Running App")
