#!/usr/bin/env python3
"""Token counter for the `cmd:` counter protocol.

Reads one JSON string per stdin line and writes its token count on stdout.

    longbio generate --counter "cmd:python3 scripts/count_tokens_tiktoken.py"

The encoding defaults to cl100k_base. Set TIKTOKEN_BPE_FILE to a local
`.tiktoken` ranks file to work offline.
"""
import json
import os
import sys

import tiktoken

CL100K_PATTERN = (
    r"""'(?i:[sdmt]|ll|ve|re)|[^\r\n\p{L}\p{N}]?+\p{L}+|\p{N}{1,3}| ?[^\s\p{L}\p{N}]++[\r\n]*|\s*[\r\n]|\s+(?!\S)|\s+"""
)


def load_encoding():
    name = os.environ.get("TIKTOKEN_ENCODING", "cl100k_base")
    path = os.environ.get("TIKTOKEN_BPE_FILE")
    if path:
        from tiktoken.load import load_tiktoken_bpe

        return tiktoken.Encoding(
            name=name,
            pat_str=CL100K_PATTERN,
            mergeable_ranks=load_tiktoken_bpe(path),
            special_tokens={},
        )
    return tiktoken.get_encoding(name)


def main():
    enc = load_encoding()
    out = sys.stdout
    for line in sys.stdin:
        line = line.rstrip("\n")
        if not line:
            continue
        text = json.loads(line)
        out.write(f"{len(enc.encode_ordinary(text))}\n")
        out.flush()


if __name__ == "__main__":
    main()
