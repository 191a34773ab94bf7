from pathlib import Path
import os

DATA_PATH = Path(os.environ.get('ONLINEPDHG_DATA_PATH', Path.home() / '.onlinepdhg' / 'data'))
DATA_PATH.mkdir(parents=True, exist_ok=True)


__version__ = "0.1.0"
