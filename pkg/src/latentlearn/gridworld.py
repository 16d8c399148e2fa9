"""Latent gridworld: mazes, expert paths, trajectory documents, online episodes.

Mazes are 5x5 grids of 3x3-floor rooms separated by wall lines (21x21 cells
total). Doors are opened on a random spanning tree of the room graph, plus a
few extras, so the floor graph is connected by construction. Each maze holds
20 objects; 15 serve as navigation targets in training and 5 stay latent -
walked past but never pursued. The agent sees a 5x5 window centred on itself
and moves in the 8 king directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import deque
import json
from pathlib import Path
from typing import Callable, Sequence

from .corpus import CONTEXT, CUE, TARGET, Document, Segment
from .rng import SeededRng
from .vocab import Vocab, build_vocab

ROOMS = 5
ROOM_SIZE = 3
GRID = ROOMS * ROOM_SIZE + ROOMS + 1  # 21

FLOOR = "."
WALL = "#"
AGENT = "@"
BOUNDARY = "%"
OBJECT_SYMBOLS = tuple("abcdefghijklmnopqrst")

WINDOW = 5
WINDOW_RADIUS = WINDOW // 2

ACTIONS = (
    ("A_N", (-1, 0)),
    ("A_NE", (-1, 1)),
    ("A_E", (0, 1)),
    ("A_SE", (1, 1)),
    ("A_S", (1, 0)),
    ("A_SW", (1, -1)),
    ("A_W", (0, -1)),
    ("A_NW", (-1, -1)),
)
ACTION_SYMBOLS = tuple(name for name, _ in ACTIONS)
ACTION_DELTAS = dict(ACTIONS)

TOKENS_PER_STEP = WINDOW * WINDOW + 1

SUITE_VALIDATION = "trained_object_validation"
SUITE_LATENT = "latent_object_test"
EVAL_SUITES = (SUITE_VALIDATION, SUITE_LATENT)

Cell = tuple[int, int]


class GridworldError(ValueError):
    pass


def maze_symbol(index: int) -> str:
    return f"MZ_{index:03d}"


@dataclass(frozen=True)
class Maze:
    index: int
    walls: tuple[str, ...]                  # 21 strings of '#'/'.'
    objects: dict[str, Cell]
    train_objects: tuple[str, ...]
    latent_objects: tuple[str, ...]

    def is_wall(self, cell: Cell) -> bool:
        r, c = cell
        return self.walls[r][c] == WALL

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < GRID and 0 <= c < GRID

    def is_floor(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.is_wall(cell)

    def floor_cells(self) -> list[Cell]:
        return [
            (r, c) for r in range(GRID) for c in range(GRID) if self.walls[r][c] == FLOOR
        ]

    @property
    def symbol(self) -> str:
        return maze_symbol(self.index)


def _room_interior(room_r: int, room_c: int) -> list[Cell]:
    r0 = room_r * (ROOM_SIZE + 1) + 1
    c0 = room_c * (ROOM_SIZE + 1) + 1
    return [(r0 + i, c0 + j) for i in range(ROOM_SIZE) for j in range(ROOM_SIZE)]


def _wall_between(a: tuple[int, int], b: tuple[int, int]) -> list[Cell]:
    """The 3 wall cells separating two adjacent rooms."""
    (ar, ac), (br, bc) = a, b
    if ar == br:
        col = max(ac, bc) * (ROOM_SIZE + 1)
        r0 = ar * (ROOM_SIZE + 1) + 1
        return [(r0 + i, col) for i in range(ROOM_SIZE)]
    row = max(ar, br) * (ROOM_SIZE + 1)
    c0 = ac * (ROOM_SIZE + 1) + 1
    return [(row, c0 + j) for j in range(ROOM_SIZE)]


def generate_maze(
    index: int,
    rng: SeededRng,
    n_objects: int = 20,
    n_latent: int = 5,
    extra_door_prob: float = 0.15,
) -> Maze:
    """A connected maze with randomized doors and object placements."""
    gen = rng.child("maze", index).generator()
    grid = [[WALL] * GRID for _ in range(GRID)]
    for rr in range(ROOMS):
        for rc in range(ROOMS):
            for (r, c) in _room_interior(rr, rc):
                grid[r][c] = FLOOR

    edges = []
    for rr in range(ROOMS):
        for rc in range(ROOMS):
            if rc + 1 < ROOMS:
                edges.append(((rr, rc), (rr, rc + 1)))
            if rr + 1 < ROOMS:
                edges.append(((rr, rc), (rr + 1, rc)))
    order = gen.permutation(len(edges))

    parent = {(r, c): (r, c) for r in range(ROOMS) for c in range(ROOMS)}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def open_door(edge) -> None:
        cells = _wall_between(*edge)
        r, c = cells[int(gen.integers(0, len(cells)))]
        grid[r][c] = FLOOR

    for i in order:
        a, b = edges[int(i)]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            open_door(edges[int(i)])
        elif gen.random() < extra_door_prob:
            open_door(edges[int(i)])

    walls = tuple("".join(row) for row in grid)
    floors = [
        (r, c) for r in range(GRID) for c in range(GRID) if walls[r][c] == FLOOR
    ]
    placement = gen.choice(len(floors), size=n_objects, replace=False)
    objects = {
        OBJECT_SYMBOLS[k]: floors[int(i)] for k, i in enumerate(placement)
    }
    names = list(objects)
    latent_idx = set(int(i) for i in gen.choice(n_objects, size=n_latent, replace=False))
    latent = tuple(names[i] for i in sorted(latent_idx))
    train = tuple(n for i, n in enumerate(names) if i not in latent_idx)
    return Maze(
        index=index, walls=walls, objects=objects,
        train_objects=train, latent_objects=latent,
    )


def neighbors(maze: Maze, cell: Cell) -> list[tuple[str, Cell]]:
    out = []
    r, c = cell
    for name, (dr, dc) in ACTIONS:
        nxt = (r + dr, c + dc)
        if maze.is_floor(nxt):
            out.append((name, nxt))
    return out


def bfs_distances(maze: Maze, src: Cell) -> dict[Cell, int]:
    if not maze.is_floor(src):
        raise GridworldError(f"source {src} is not a floor cell")
    dist = {src: 0}
    queue = deque([src])
    while queue:
        cur = queue.popleft()
        for _, nxt in neighbors(maze, cur):
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


def is_connected(maze: Maze) -> bool:
    floors = maze.floor_cells()
    return len(bfs_distances(maze, floors[0])) == len(floors)


def shortest_path(maze: Maze, src: Cell, dst: Cell) -> list[str]:
    """A minimum-length king-move action list from src to dst.

    Ties are broken by the fixed action order, so the expert path for a given
    (maze, src, dst) is always the same.
    """
    for cell, name in ((src, "from"), (dst, "to")):
        if not maze.is_floor(cell):
            raise GridworldError(f"{name} cell {cell} is not floor")
    if src == dst:
        return []
    prev: dict[Cell, tuple[Cell, str]] = {}
    seen = {src}
    queue = deque([src])
    while queue:
        cur = queue.popleft()
        for name, nxt in neighbors(maze, cur):
            if nxt in seen:
                continue
            seen.add(nxt)
            prev[nxt] = (cur, name)
            if nxt == dst:
                actions: list[str] = []
                cell = dst
                while cell != src:
                    cell, action = prev[cell]
                    actions.append(action)
                return actions[::-1]
            queue.append(nxt)
    raise GridworldError(f"no path from {src} to {dst}; maze {maze.index} is corrupt")


def observation(maze: Maze, pos: Cell) -> list[str]:
    """Row-major 5x5 window centred on pos; '%' beyond the map edge."""
    obj_at = {cell: sym for sym, cell in maze.objects.items()}
    out = []
    for dr in range(-WINDOW_RADIUS, WINDOW_RADIUS + 1):
        for dc in range(-WINDOW_RADIUS, WINDOW_RADIUS + 1):
            cell = (pos[0] + dr, pos[1] + dc)
            if not maze.in_bounds(cell):
                out.append(BOUNDARY)
            elif cell == pos:
                out.append(AGENT)
            elif cell in obj_at:
                out.append(obj_at[cell])
            elif maze.is_wall(cell):
                out.append(WALL)
            else:
                out.append(FLOOR)
    return out


@dataclass
class Trajectory:
    maze_index: int
    target: str
    start: Cell
    steps: list[tuple[list[str], str]]   # (observation window, action)
    outcome: str                         # "reached" or "truncated"


def generate_trajectory(maze: Maze, target: str, start: Cell) -> Trajectory:
    if target not in maze.objects:
        raise GridworldError(f"object {target!r} is not placed in maze {maze.index}")
    actions = shortest_path(maze, start, maze.objects[target])
    steps = []
    pos = start
    for action in actions:
        steps.append((observation(maze, pos), action))
        dr, dc = ACTION_DELTAS[action]
        pos = (pos[0] + dr, pos[1] + dc)
    return Trajectory(
        maze_index=maze.index, target=target, start=start, steps=steps, outcome="reached"
    )


def sighted_objects(maze: Maze, steps: Sequence[tuple[list[str], str]]) -> set[str]:
    seen: set[str] = set()
    for obs, _ in steps:
        seen.update(s for s in obs if s in maze.objects)
    return seen


def tokenize_trajectory(
    traj: Trajectory, vocab: Vocab, max_len: int, meta: dict[str, str] | None = None
) -> Document:
    """`[target, maze-index, (25 window symbols + action) per step]`.

    Over-long trajectories keep only the leading steps that fit; loss-bearing
    target spans cover the action tokens only.
    """
    if max_len < 2 + TOKENS_PER_STEP:
        raise GridworldError(f"max_len {max_len} cannot fit a single step")
    n_fit = (max_len - 2) // TOKENS_PER_STEP
    steps = traj.steps[:n_fit]
    symbols = [traj.target, maze_symbol(traj.maze_index)]
    kinds: list[Segment] = [Segment(0, 2, CUE)]
    pos = 2
    for obs, action in steps:
        symbols.extend(obs)
        symbols.append(action)
        kinds.append(Segment(pos, pos + TOKENS_PER_STEP - 1, CONTEXT))
        kinds.append(Segment(pos + TOKENS_PER_STEP - 1, pos + TOKENS_PER_STEP, TARGET))
        pos += TOKENS_PER_STEP
    doc_meta = {
        "benchmark": "gridworld_bc",
        "maze": maze_symbol(traj.maze_index),
        "target": traj.target,
        "start": f"{traj.start[0]},{traj.start[1]}",
        "n_steps": str(len(steps)),
        "truncated": "1" if len(steps) < len(traj.steps) else "0",
    }
    if meta:
        doc_meta.update(meta)
    return Document(tokens=vocab.encode(symbols), segments=kinds, meta=doc_meta)


@dataclass
class EpisodeResult:
    outcome: str                          # "reached" or "truncated"
    steps_taken: int
    trace: list[tuple[Cell, str, bool]]   # (cell before, emitted symbol, applied)
    invalid_symbols: int = 0

    @property
    def success(self) -> bool:
        return self.outcome == "reached"


def run_online_episode(
    maze: Maze,
    target: str,
    start: Cell,
    policy: Callable[[list[str]], str],
    step_budget: int,
) -> EpisodeResult:
    """Step the environment with the policy's actions.

    The policy receives each new observation window and returns a symbol.
    Moves into walls or off the map are no-ops; non-action symbols are no-ops
    too, counted separately. Every emission consumes one step.
    """
    if target not in maze.objects:
        raise GridworldError(f"object {target!r} is not placed in maze {maze.index}")
    if not maze.is_floor(start):
        raise GridworldError(f"start {start} is not a floor cell")
    goal = maze.objects[target]
    pos = start
    trace: list[tuple[Cell, str, bool]] = []
    invalid = 0
    if pos == goal:
        return EpisodeResult("reached", 0, trace)
    for step in range(step_budget):
        emitted = policy(observation(maze, pos))
        applied = False
        if emitted in ACTION_DELTAS:
            dr, dc = ACTION_DELTAS[emitted]
            nxt = (pos[0] + dr, pos[1] + dc)
            if maze.is_floor(nxt):
                pos = nxt
                applied = True
        else:
            invalid += 1
        trace.append((pos, emitted, applied))
        if pos == goal:
            return EpisodeResult("reached", step + 1, trace, invalid)
    return EpisodeResult("truncated", step_budget, trace, invalid)


def default_step_budget(maze: Maze, start: Cell, target: str) -> int:
    dist = bfs_distances(maze, start).get(maze.objects[target])
    if dist is None:
        raise GridworldError(f"target {target!r} unreachable from {start}")
    return max(30, 4 * dist)


@dataclass(frozen=True)
class GridworldDatasetConfig:
    n_mazes: int = 100
    n_objects: int = 20
    n_latent_objects: int = 5
    trajectories_per_pair: int = 40
    max_doc_len: int = 1024
    extra_door_prob: float = 0.15

    def __post_init__(self) -> None:
        if self.n_latent_objects >= self.n_objects:
            raise GridworldError("need at least one trainable object")
        if self.n_objects > len(OBJECT_SYMBOLS):
            raise GridworldError(f"at most {len(OBJECT_SYMBOLS)} objects supported")


@dataclass(frozen=True)
class EpisodeSpec:
    maze_index: int
    target: str
    start: Cell


def build_gridworld_vocab(config: GridworldDatasetConfig) -> Vocab:
    inventory = (
        [FLOOR, WALL, AGENT, BOUNDARY]
        + list(OBJECT_SYMBOLS[: config.n_objects])
        + list(ACTION_SYMBOLS)
        + [maze_symbol(i) for i in range(config.n_mazes)]
    )
    return build_vocab(inventory)


def generate_mazes(config: GridworldDatasetConfig, rng: SeededRng) -> list[Maze]:
    return [
        generate_maze(
            i, rng, config.n_objects, config.n_latent_objects, config.extra_door_prob
        )
        for i in range(config.n_mazes)
    ]


def _traj_meta(maze: Maze, traj: Trajectory, steps_kept: list, doc_id: str) -> dict[str, str]:
    sighted = sighted_objects(maze, steps_kept) | {traj.target}
    keys = ";".join(f"bct:{maze.symbol}:{o}" for o in sorted(sighted))
    return {
        "split": "train",
        "doc_id": doc_id,
        "provides": keys,
        "needs": f"bct:{maze.symbol}:{traj.target}",
        "sighted": ",".join(sorted(sighted)),
    }


def _tokenized_training_doc(
    maze: Maze, target: str, start: Cell, vocab: Vocab, max_len: int, doc_id: str
) -> Document:
    traj = generate_trajectory(maze, target, start)
    n_fit = (max_len - 2) // TOKENS_PER_STEP
    doc = tokenize_trajectory(
        traj, vocab, max_len, _traj_meta(maze, traj, traj.steps[:n_fit], doc_id)
    )
    return doc


def build_training_set(
    mazes: Sequence[Maze],
    config: GridworldDatasetConfig,
    rng: SeededRng,
    vocab: Vocab,
) -> tuple[list[Document], dict[tuple[int, str], set[Cell]]]:
    """Expert trajectory documents for every (maze, trained object) pair.

    Start cells are uniform over floor cells. After the main pass, any latent
    object that no trajectory of its maze has sighted gets extra trajectories
    started next to it, so every latent object is seen in training.
    """
    docs: list[Document] = []
    used_starts: dict[tuple[int, str], set[Cell]] = {}
    for maze in mazes:
        floors = maze.floor_cells()
        maze_docs: list[Document] = []
        for target in maze.train_objects:
            goal = maze.objects[target]
            starts = used_starts.setdefault((maze.index, target), set())
            gen = rng.child("starts", maze.index, target).generator()
            for k in range(config.trajectories_per_pair):
                while True:
                    start = floors[int(gen.integers(0, len(floors)))]
                    if start != goal:
                        break
                starts.add(start)
                maze_docs.append(
                    _tokenized_training_doc(
                        maze, target, start, vocab, config.max_doc_len,
                        f"{maze.symbol}-{target}-{k}",
                    )
                )
        sighted: set[str] = set()
        for doc in maze_docs:
            sighted.update(doc.meta["sighted"].split(","))
        for latent in maze.latent_objects:
            if latent in sighted:
                continue
            lr, lc = maze.objects[latent]
            nearby = sorted(
                (c for c in floors
                 if max(abs(c[0] - lr), abs(c[1] - lc)) <= WINDOW_RADIUS and c != (lr, lc)),
            )
            for j, target in enumerate(maze.train_objects):
                start = nearby[j % len(nearby)]
                if start == maze.objects[target]:
                    continue
                doc = _tokenized_training_doc(
                    maze, target, start, vocab, config.max_doc_len,
                    f"{maze.symbol}-{target}-sight-{latent}",
                )
                if latent in doc.meta["sighted"].split(","):
                    used_starts[(maze.index, target)].add(start)
                    maze_docs.append(doc)
                    break
            else:
                raise GridworldError(
                    f"could not arrange a sighting of latent object {latent!r} "
                    f"in maze {maze.index}"
                )
        docs.extend(maze_docs)
    return docs, used_starts


def build_eval_episodes(
    mazes: Sequence[Maze],
    config: GridworldDatasetConfig,
    rng: SeededRng,
    used_starts: dict[tuple[int, str], set[Cell]],
    episodes_per_suite: int,
) -> dict[str, list[EpisodeSpec]]:
    """Validation episodes (trained objects, novel starts) and latent tests."""
    suites: dict[str, list[EpisodeSpec]] = {SUITE_VALIDATION: [], SUITE_LATENT: []}
    pairs_val = [(m, o) for m in mazes for o in m.train_objects]
    pairs_lat = [(m, o) for m in mazes for o in m.latent_objects]
    for suite, pairs in ((SUITE_VALIDATION, pairs_val), (SUITE_LATENT, pairs_lat)):
        for j in range(episodes_per_suite):
            maze, target = pairs[j % len(pairs)]
            goal = maze.objects[target]
            gen = rng.child("eval", suite, j).generator()
            floors = maze.floor_cells()
            taken = used_starts.get((maze.index, target), set()) if suite == SUITE_VALIDATION else set()
            for _ in range(256):
                start = floors[int(gen.integers(0, len(floors)))]
                if start != goal and start not in taken:
                    break
            else:
                raise GridworldError(
                    f"no unused start cell for maze {maze.index} target {target!r}"
                )
            suites[suite].append(EpisodeSpec(maze.index, target, start))
    return suites


@dataclass
class GridworldDataset:
    config: GridworldDatasetConfig
    vocab: Vocab
    mazes: list[Maze]
    train_docs: list[Document] = field(repr=False, default_factory=list)
    episode_suites: dict[str, list[EpisodeSpec]] = field(default_factory=dict)


def generate_dataset(
    config: GridworldDatasetConfig, rng: SeededRng, episodes_per_suite: int = 500
) -> GridworldDataset:
    vocab = build_gridworld_vocab(config)
    mazes = generate_mazes(config, rng)
    docs, used = build_training_set(mazes, config, rng, vocab)
    suites = build_eval_episodes(mazes, config, rng, used, episodes_per_suite)
    return GridworldDataset(
        config=config, vocab=vocab, mazes=mazes, train_docs=docs, episode_suites=suites
    )


def mazes_to_json(mazes: Sequence[Maze]) -> str:
    """Archive format: ASCII grid blocks plus object tables, for replay."""
    payload = []
    for m in mazes:
        rows = [list(row) for row in m.walls]
        for sym, (r, c) in m.objects.items():
            rows[r][c] = sym
        payload.append(
            {
                "index": m.index,
                "grid": ["".join(row) for row in rows],
                "objects": {sym: list(cell) for sym, cell in sorted(m.objects.items())},
                "train_objects": list(m.train_objects),
                "latent_objects": list(m.latent_objects),
            }
        )
    return json.dumps(payload, indent=1, sort_keys=True)


def mazes_from_json(payload: str) -> list[Maze]:
    mazes = []
    for entry in json.loads(payload):
        walls = tuple(
            "".join(WALL if ch == WALL else FLOOR for ch in row) for row in entry["grid"]
        )
        mazes.append(
            Maze(
                index=entry["index"],
                walls=walls,
                objects={sym: (r, c) for sym, (r, c) in entry["objects"].items()},
                train_objects=tuple(entry["train_objects"]),
                latent_objects=tuple(entry["latent_objects"]),
            )
        )
    return mazes


def save_mazes(path: Path | str, mazes: Sequence[Maze]) -> None:
    Path(path).write_text(mazes_to_json(mazes), encoding="utf-8")


def load_mazes(path: Path | str) -> list[Maze]:
    return mazes_from_json(Path(path).read_text(encoding="utf-8"))
