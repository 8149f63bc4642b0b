import logging
import os
from typing import Optional

from dotenv import dotenv_values, find_dotenv, load_dotenv

logger = logging.getLogger(__name__)

# Overrides the dense-unitary qubit guard from [CIRCUITS] max_dense_qubits.
MAX_QUBITS_VAR = "POISSON_BE_MAX_QUBITS"


class EnvManager:
    """Reads per-machine overrides from the process environment and a .env file."""

    DEFAULT_ENV_FILE = ".env"

    def __init__(self, env_file=DEFAULT_ENV_FILE):
        # Search upwards from the working directory; a missing file is normal.
        self.env_file = find_dotenv(filename=env_file, raise_error_if_not_found=False, usecwd=True)
        if self.env_file:
            logger.debug(f"Using .env file found at: '{self.env_file}'")
            self.load()
        else:
            logger.debug(f".env file ('{env_file}') not found; using the process environment only.")

    def load(self) -> bool:
        """Loads variables from the .env file without overriding the process environment."""
        if self.env_file and os.path.exists(self.env_file):
            load_dotenv(dotenv_path=self.env_file, override=False)
            return True
        return False

    def get_secret(self, name: str) -> Optional[str]:
        """Gets a value from the environment, then directly from the .env file."""
        value = os.environ.get(name)
        if value:
            return value
        if self.env_file and os.path.exists(self.env_file):
            try:
                value = dotenv_values(self.env_file).get(name)
            except Exception as e:
                logger.error(f"Error reading '{name}' from '{self.env_file}': {e}")
                value = None
        return value or None

    def get_int(self, name: str, fallback: Optional[int] = None) -> Optional[int]:
        """Gets an integer override; malformed values are ignored with a warning."""
        raw = self.get_secret(name)
        if raw is None:
            return fallback
        try:
            return int(raw)
        except ValueError:
            logger.warning(f"Environment value {name}={raw!r} is not an integer. Using fallback: {fallback}")
            return fallback


# --- Singleton Instance ---
env_manager = EnvManager()
