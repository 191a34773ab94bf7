from typing import Any, Callable, Dict, Hashable

import numpy as np


class LRUDataCache:
    """Keep at most `max_elem` elements, evicting the least requested one

    Parameters:
        max_elem: Maximum number of stored elements
    """

    def __init__(self, max_elem: int):
        self.max_elem = max_elem
        self.data: Dict[Hashable, Dict[str, Any]] = {}

    def get(self, key: Hashable) -> Any:
        self.data[key]['hit'] += 1

        return self.data[key]['elem']

    def add(self, key: Hashable, elem: Any) -> Any:
        if len(self.data) == self.max_elem:
            keys = list(self.data.keys())
            key_to_remove = np.argmin([self.data[k]['hit'] for k in keys])
            del self.data[keys[key_to_remove]]
        self.data[key] = {
            'elem': elem,
            'hit': 0
        }
        return elem

    def get_or_load(self, key: Hashable, loader: Callable[[], Any]) -> Any:
        """Return the cached element or build it with `loader` and store it

        Parameters:
            key: Cache key
            loader: Zero-argument callable producing the element

        Returns:
            The cached or freshly loaded element
        """
        if key in self.data:
            return self.get(key)
        return self.add(key, loader())

    def __contains__(self, key: Hashable) -> bool:
        return key in self.data

    def __len__(self):
        return len(self.data)
