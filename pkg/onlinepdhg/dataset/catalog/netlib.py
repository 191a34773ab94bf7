"""Netlib LP instances

The instances are fetched as `.mps.gz` files from the coin-or Data-Netlib
mirror and cached inside `DATA_PATH / "netlib"`.

Example:
    ```
    lp = load_netlib("afiro")
    lp.m, lp.n
    ```
"""
import logging
from pathlib import Path

from onlinepdhg import DATA_PATH
from onlinepdhg.dataset.mps import GeneralLp, read_mps
from onlinepdhg.utils.download import download

logger = logging.getLogger(__name__)

DATASET_PATH = DATA_PATH / "netlib"

URL = "https://raw.githubusercontent.com/coin-or-tools/Data-Netlib/master/"


def netlib_instance(name: str, path: Path = DATASET_PATH) -> Path:
    """Path of a Netlib instance, downloading it when not cached yet

    Parameters:
        name: Instance name, e.g. 'afiro'
        path: Folder where instances are stored

    Returns:
        Path to the `.mps.gz` file
    """
    path.mkdir(parents=True, exist_ok=True)
    filename = f"{name.lower()}.mps.gz"
    output = path / filename
    if not output.is_file():
        logger.info(f"Downloading Netlib instance {name}")
        download(URL + filename, output)
    return output


def load_netlib(name: str, path: Path = DATASET_PATH) -> GeneralLp:
    """Parse a Netlib instance

    Parameters:
        name: Instance name
        path: Folder where instances are stored
    """
    lp = read_mps(netlib_instance(name, path))
    lp.name = name.lower()
    return lp
