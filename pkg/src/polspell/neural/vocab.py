from __future__ import annotations

from typing import Iterable, Sequence

PAD, SOS, EOS, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<s>", "</s>", "<unk>")


class CharVocab:
    """Character index with four reserved slots (PAD, SOS, EOS, UNK) first."""

    def __init__(self, chars: Sequence[str]):
        chars = list(chars)
        if len(set(chars)) != len(chars):
            raise ValueError("duplicate characters in vocabulary")
        if any(len(ch) != 1 for ch in chars):
            raise ValueError("vocabulary entries must be single code points")
        self.chars = chars
        self.index = {ch: i + len(RESERVED) for i, ch in enumerate(chars)}

    @classmethod
    def from_texts(cls, texts: Iterable[str]) -> "CharVocab":
        return cls(sorted({ch for text in texts for ch in text}))

    def __len__(self) -> int:
        return len(self.chars) + len(RESERVED)

    def __eq__(self, other) -> bool:
        return isinstance(other, CharVocab) and self.chars == other.chars

    def encode(self, text: str) -> list[int]:
        return [self.index.get(ch, UNK) for ch in text]

    def char(self, idx: int) -> str:
        """Character for ``idx``; reserved indices decode to the empty string."""
        if idx < len(RESERVED):
            return ""
        return self.chars[idx - len(RESERVED)]

    def decode(self, ids: Iterable[int]) -> str:
        return "".join(self.char(i) for i in ids)
