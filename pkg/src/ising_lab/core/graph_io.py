import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

from pydantic import ValidationError

from src.ising_lab.core.models import Graph
from src.ising_lab.errors import InvalidInputError

logger = logging.getLogger(__name__)


def graph_to_dict(graph: Graph) -> Dict[str, Any]:
    return {"n": graph.n, "delta_cap": graph.delta_cap, "edges": [list(e) for e in graph.edges]}


def graph_from_dict(data: Dict[str, Any]) -> Graph:
    missing = [key for key in ("n", "delta_cap", "edges") if key not in data]
    if missing:
        raise InvalidInputError(f"graph record is missing keys: {missing}")
    try:
        return Graph(n=data["n"], delta_cap=data["delta_cap"], edges=data["edges"])
    except ValidationError as e:
        raise InvalidInputError(f"invalid graph: {e}") from e


def load_graph(path: Union[str, Path]) -> Graph:
    path = Path(path)
    try:
        with path.open("r") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise InvalidInputError(f"graph file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"graph file {path} is not valid JSON: {e}") from e
    graph = graph_from_dict(data)
    logger.debug("Loaded graph from %s: n=%d, |E|=%d, delta_cap=%d", path, graph.n, graph.num_edges, graph.delta_cap)
    return graph


def save_graph(graph: Graph, path: Union[str, Path]) -> None:
    with Path(path).open("w") as f:
        json.dump(graph_to_dict(graph), f)
