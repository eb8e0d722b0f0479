"""Character/phoneme tokenizer.

Accepts pre-phonemized IPA strings or any text; every unicode character
is a token.  Blank token (id 0) is interleaved into encoder inputs but
never appears in CTC targets.  The vocabulary is a versioned JSON file
so checkpoints can be shipped with their token table.
"""

from __future__ import annotations

import json
from pathlib import Path

BLANK_ID = 0
BLANK_TOKEN = "<blank>"
UNK_TOKEN = "<unk>"
VOCAB_VERSION = 1


class Tokenizer:
    def __init__(self, tokens: dict[str, int]):
        if tokens.get(BLANK_TOKEN) != BLANK_ID:
            raise ValueError("vocabulary must map <blank> to id 0")
        self.tokens = dict(tokens)
        self.unk_id = self.tokens.get(UNK_TOKEN)

    @classmethod
    def build(cls, texts) -> "Tokenizer":
        chars = sorted({ch for text in texts for ch in text})
        tokens = {BLANK_TOKEN: BLANK_ID, UNK_TOKEN: 1}
        for ch in chars:
            tokens.setdefault(ch, len(tokens))
        return cls(tokens)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def encode(self, text: str, interleave_blank: bool = True) -> list[int]:
        """Token ids; with blanks the layout is [b, t1, b, t2, ..., tn, b]."""
        if not text:
            raise ValueError("cannot encode empty text")
        ids = [self.tokens.get(ch, self.unk_id) for ch in text]
        if not interleave_blank:
            return ids
        out = [BLANK_ID]
        for i in ids:
            out.extend((i, BLANK_ID))
        return out

    def ctc_targets(self, text: str) -> list[int]:
        return self.encode(text, interleave_blank=False)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(
            {"version": VOCAB_VERSION, "tokens": self.tokens}, indent=0,
            ensure_ascii=False))

    @classmethod
    def load(cls, path) -> "Tokenizer":
        data = json.loads(Path(path).read_text())
        if data.get("version") != VOCAB_VERSION:
            raise ValueError(f"unsupported vocabulary version {data.get('version')}")
        return cls(data["tokens"])
