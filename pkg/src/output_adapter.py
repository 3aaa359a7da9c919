"""
Output abstraction layer for result tables
Supports CSV files in a local directory and in-memory collection
"""
import os
import threading
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Optional
import logging

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'


def complex_columns(name: str, values) -> Dict[str, np.ndarray]:
    """Split a complex column into name_re / name_im"""
    values = np.asarray(values, dtype=complex)
    return {f"{name}_re": values.real, f"{name}_im": values.imag}


class OutputAdapter(ABC):
    """Abstract base class for output adapters"""

    @abstractmethod
    def write_table(self, name: str, frame: pd.DataFrame) -> str:
        """
        Write one result table

        Args:
            name: Table file name, e.g. 'u.csv'
            frame: Table contents

        Returns:
            Location the table was written to
        """
        pass

    @abstractmethod
    def written(self) -> List[str]:
        """Names of the tables written so far, in order"""
        pass


class LocalOutputAdapter(OutputAdapter):
    """Output adapter for a local directory"""

    def __init__(self, output_dir: str):
        """
        Initialize local output adapter

        Args:
            output_dir: Directory receiving the CSV files (created if missing)
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._written: List[str] = []

    def write_table(self, name: str, frame: pd.DataFrame) -> str:
        path = self.output_dir / name
        with self._lock:
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
            self._written.append(name)
        logger.info(f"Wrote {path} ({len(frame)} rows)")
        return str(path)

    def written(self) -> List[str]:
        with self._lock:
            return list(self._written)


class MemoryOutputAdapter(OutputAdapter):
    """Keeps tables in memory; used by tests and dry runs"""

    def __init__(self):
        self.tables: Dict[str, pd.DataFrame] = {}
        self._lock = threading.Lock()

    def write_table(self, name: str, frame: pd.DataFrame) -> str:
        with self._lock:
            self.tables[name] = frame.copy()
        logger.debug(f"Kept {name} in memory ({len(frame)} rows)")
        return f"memory://{name}"

    def written(self) -> List[str]:
        with self._lock:
            return list(self.tables)


def create_output_adapter(output_type: Optional[str] = None, **kwargs) -> OutputAdapter:
    """
    Factory function to create the appropriate output adapter

    Args:
        output_type: 'local' or 'memory' (defaults to env var QUASIHELM_OUTPUT or 'local')
        **kwargs: For local: output_dir

    Returns:
        OutputAdapter instance
    """
    if output_type is None:
        output_type = os.getenv('QUASIHELM_OUTPUT', 'local').lower()

    if output_type == 'local':
        output_dir = kwargs.get('output_dir') or 'results'
        return LocalOutputAdapter(output_dir)

    elif output_type == 'memory':
        return MemoryOutputAdapter()

    else:
        raise ValueError(f"Unknown output type: {output_type}. Must be 'local' or 'memory'")
