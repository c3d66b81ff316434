"""
Region adjacency graphs.

Parses and writes .gra files and builds the intrinsic GMRF precision
matrix used as the prior of the spatial effect.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, TextIO

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import breadth_first_order

from geoquant.models import GraphError, ParseError


@dataclass(frozen=True)
class RegionGraph:
  """Labeled regions with symmetric adjacency lists of zero-based indices."""

  labels: tuple[str, ...]
  adjacency: tuple[tuple[int, ...], ...]

  def __post_init__(self):
    labels = tuple(str(label) for label in self.labels)
    adjacency = tuple(tuple(sorted(int(j) for j in nbrs)) for nbrs in self.adjacency)

    if len(labels) != len(adjacency):
      raise GraphError("Number of labels and adjacency lists differ")
    if len(set(labels)) != len(labels):
      raise GraphError("Region labels must be unique")

    size = len(labels)
    for i, nbrs in enumerate(adjacency):
      if len(set(nbrs)) != len(nbrs):
        raise GraphError(f"Region '{labels[i]}' lists a neighbor twice")
      for j in nbrs:
        if not 0 <= j < size:
          raise GraphError(f"Region '{labels[i]}' has neighbor index {j} out of range")
        if j == i:
          raise GraphError(f"Region '{labels[i]}' is listed as its own neighbor")

    for i, nbrs in enumerate(adjacency):
      for j in nbrs:
        if i not in adjacency[j]:
          raise GraphError(f"Asymmetric adjacency between '{labels[i]}' and '{labels[j]}'")

    object.__setattr__(self, "labels", labels)
    object.__setattr__(self, "adjacency", adjacency)

  @property
  def size(self) -> int:
    return len(self.labels)



@dataclass(frozen=True)
class GmrfPrecision:
  """Intrinsic GMRF precision Q = D - A with its connected components."""

  dimension: int
  matrix: sparse.csr_matrix
  components: tuple[tuple[int, ...], ...]

  @property
  def rank(self) -> int:
    return self.dimension - len(self.components)


class _LineCursor:
  """Iterates the lines of a text stream while remembering the line number."""

  def __init__(self, source: TextIO):
    self._lines = iter(source)
    self.lineno = 0

  def next(self, skip_blank: bool = True) -> Optional[str]:
    for line in self._lines:
      self.lineno += 1
      text = line.strip()
      if text or not skip_blank:
        return text
    return None

  def rest_is_blank(self) -> bool:
    return self.next() is None


def _parse_int(text: Optional[str], cursor: _LineCursor, what: str) -> int:
  if text is None:
    raise ParseError(cursor.lineno, f"Unexpected end of file while reading {what}")
  try:
    return int(text)
  except ValueError:
    raise ParseError(cursor.lineno, f"{what.capitalize()} must be an integer, found '{text}'")


def parse_gra(source: TextIO) -> RegionGraph:
  """Parse a .gra file: count, then label / neighbor count / neighbor indices per region."""
  cursor = _LineCursor(source)

  declared = _parse_int(cursor.next(), cursor, "region count")
  if declared < 1:
    raise ParseError(cursor.lineno, "Region count must be positive")

  labels: list[str] = []
  adjacency: list[list[int]] = []
  for _ in range(declared):
    label = cursor.next()
    if label is None:
      raise ParseError(cursor.lineno, f"Declared {declared} regions, found {len(labels)}")
    labels.append(label)

    count = _parse_int(cursor.next(), cursor, "neighbor count")
    if count < 0:
      raise ParseError(cursor.lineno, "Neighbor count cannot be negative")
    if count == 0:
      # the empty neighbor line of an isolated region is skipped with the blanks
      adjacency.append([])
      continue

    text = cursor.next(skip_blank=False)
    try:
      nbrs = [int(tok) for tok in (text or "").split()]
    except ValueError:
      raise ParseError(cursor.lineno, "Neighbor indices must be integers")
    if len(nbrs) != count:
      raise ParseError(cursor.lineno, f"Expected {count} neighbor indices, found {len(nbrs)}")
    for j in nbrs:
      if not 0 <= j < declared:
        raise ParseError(cursor.lineno, f"Neighbor index {j} out of range for {declared} regions")
    adjacency.append(nbrs)

  if not cursor.rest_is_blank():
    raise ParseError(cursor.lineno, f"Declared {declared} regions but the file continues")

  return RegionGraph(tuple(labels), tuple(tuple(a) for a in adjacency))


def read_gra_file(path: Path) -> RegionGraph:
  with open(path, "r", encoding="utf-8") as f:
    return parse_gra(f)


def write_gra(graph: RegionGraph, sink: TextIO) -> None:
  """Serialize a RegionGraph in .gra format."""
  sink.write(f"{graph.size}\n")
  for label, nbrs in zip(graph.labels, graph.adjacency):
    sink.write(f"{label}\n{len(nbrs)}\n")
    sink.write(" ".join(str(j) for j in nbrs) + "\n")


def write_gra_file(graph: RegionGraph, path: Path) -> None:
  with open(path, "w", encoding="utf-8") as f:
    write_gra(graph, f)


def adjacency_matrix(graph: RegionGraph) -> sparse.csr_matrix:
  rows = [i for i, nbrs in enumerate(graph.adjacency) for _ in nbrs]
  cols = [j for nbrs in graph.adjacency for j in nbrs]
  data = np.ones(len(rows), dtype=np.int64)
  return sparse.csr_matrix((data, (rows, cols)), shape=(graph.size, graph.size))


def connected_components(graph: RegionGraph) -> tuple[tuple[int, ...], ...]:
  """Partition of region indices into connected components, ordered by smallest member."""
  adj = adjacency_matrix(graph)
  visited = np.zeros(graph.size, dtype=bool)
  parts = []
  for start in range(graph.size):
    if visited[start]:
      continue
    order = breadth_first_order(adj, start, directed=False, return_predecessors=False)
    visited[order] = True
    parts.append(tuple(sorted(int(i) for i in order)))
  return tuple(parts)


def precision_matrix(graph: RegionGraph) -> GmrfPrecision:
  """Q with Q_ii = degree(i), Q_ij = -1 for neighbors and 0 otherwise."""
  adj = adjacency_matrix(graph)
  degrees = np.asarray(adj.sum(axis=1)).ravel()
  q = (sparse.diags(degrees, format="csr", dtype=np.int64) - adj).tocsr()
  q.sort_indices()
  return GmrfPrecision(graph.size, q, connected_components(graph))


def region_index(graph: RegionGraph, values: Sequence[int]) -> np.ndarray:
  """Map integer region identifiers to zero-based graph positions."""
  lookup = {label: i for i, label in enumerate(graph.labels)}
  index = np.empty(len(values), dtype=np.int64)
  for k, value in enumerate(values):
    key = str(int(value))
    if key not in lookup:
      raise GraphError(f"Region '{key}' is absent from the graph")
    index[k] = lookup[key]
  return index
