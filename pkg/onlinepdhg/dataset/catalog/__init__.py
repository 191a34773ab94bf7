from onlinepdhg.dataset.catalog.netlib import load_netlib, netlib_instance
