"""Urban heat island analysis toolkit."""

import json

from ._core import (
    NODATA,
    HeatlabError,
    Service,
    __version__,
    euclidean_distance,
    export_geotiff,
    import_geotiff,
    metrics,
    read_grid,
    run_cli,
    split_high_heat,
    split_random,
    write_grid,
)

__all__ = [
    "NODATA",
    "HeatlabError",
    "Service",
    "__version__",
    "api_json",
    "euclidean_distance",
    "export_geotiff",
    "import_geotiff",
    "metrics",
    "read_grid",
    "run_cli",
    "split_high_heat",
    "split_random",
    "write_grid",
]


def api_json(service, path, **query):
    """GET `path` and decode the JSON body; returns (status, document)."""
    status, _, body = service.request("GET", path, {k: str(v) for k, v in query.items()})
    return status, json.loads(body)
