import logging
from pathlib import Path

import requests
from tqdm.auto import tqdm

logger = logging.getLogger(__name__)


def download(URL: str, output_path: Path, timeout: float = 30.0):
    """Stream a remote file to disk showing a progress bar

    A partially written file is removed when the transfer fails.

    Parameters:
        URL: Address of the file
        output_path: Where to store it
        timeout: Connection timeout in seconds

    Raises:
        requests.HTTPError: When the server does not answer with 200
    """
    response = requests.get(URL, stream=True, timeout=timeout)
    response.raise_for_status()
    total_size_in_bytes = int(response.headers.get('content-length', 0))
    block_size = 1024
    progress_bar = tqdm(total=total_size_in_bytes, unit='iB', unit_scale=True)
    try:
        with open(output_path, 'wb') as file:
            for data in response.iter_content(block_size):
                progress_bar.update(len(data))
                file.write(data)
    except Exception:
        logger.error(f"Download of {URL} failed, removing {output_path}")
        Path(output_path).unlink(missing_ok=True)
        raise
    finally:
        progress_bar.close()
