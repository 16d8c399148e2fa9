"""Symbol vocabulary shared by generators, trainer, and evaluation.

Symbols are plain strings (`I_07`, `O_113`, `CB_0042`, `<definition>`, ...).
Ids are dense from 0: the reserved symbols first, then the content inventory
in sorted order, so a regenerated vocabulary is stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

PAD = "<pad>"
EOD = "<eod>"
RESERVED_SYMBOLS = (PAD, EOD)


class VocabError(ValueError):
    pass


@dataclass(frozen=True)
class Vocab:
    symbols: tuple[str, ...]
    reserved: frozenset[str] = frozenset(RESERVED_SYMBOLS)
    _ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = {sym: i for i, sym in enumerate(self.symbols)}
        if len(ids) != len(self.symbols):
            seen: set[str] = set()
            for sym in self.symbols:
                if sym in seen:
                    raise VocabError(f"duplicate symbol in vocabulary: {sym!r}")
                seen.add(sym)
        missing = self.reserved - set(ids)
        if missing:
            raise VocabError(f"reserved symbols missing from vocabulary: {sorted(missing)}")
        object.__setattr__(self, "_ids", ids)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._ids

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def eod_id(self) -> int:
        return self._ids[EOD]

    def id_of(self, symbol: str) -> int:
        try:
            return self._ids[symbol]
        except KeyError:
            raise VocabError(f"unknown symbol: {symbol!r}") from None

    def symbol_of(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.symbols):
            raise VocabError(f"token id out of range: {token_id}")
        return self.symbols[token_id]

    def encode(self, text: Sequence[str]) -> list[int]:
        ids = []
        for pos, sym in enumerate(text):
            tok = self._ids.get(sym)
            if tok is None:
                raise VocabError(f"unknown symbol {sym!r} at position {pos}")
            ids.append(tok)
        return ids

    def decode(self, token_ids: Sequence[int]) -> list[str]:
        return [self.symbol_of(t) for t in token_ids]

    def to_json(self) -> str:
        return json.dumps(
            {"reserved": sorted(self.reserved), "symbols": list(self.symbols)},
            indent=0,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, payload: str) -> "Vocab":
        data = json.loads(payload)
        return cls(symbols=tuple(data["symbols"]), reserved=frozenset(data["reserved"]))

    def save(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "Vocab":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_vocab(inventory: Iterable[str], reserved: Sequence[str] = RESERVED_SYMBOLS) -> Vocab:
    """Build a vocabulary from a content-symbol inventory plus reserved symbols.

    Content ids follow the reserved block in sorted-inventory order.
    Rejects duplicate symbols and collisions with the reserved set.
    """
    inventory = list(inventory)
    seen: set[str] = set()
    for sym in inventory:
        if sym in seen:
            raise VocabError(f"duplicate symbol in inventory: {sym!r}")
        if sym in reserved:
            raise VocabError(f"inventory symbol collides with reserved symbol: {sym!r}")
        seen.add(sym)
    symbols = tuple(sorted(reserved)) + tuple(sorted(inventory))
    return Vocab(symbols=symbols, reserved=frozenset(reserved))
