"""Hermetic stand-in for a lossy video encoder, used by the test suite.

Encode: quantizes y4m plane bytes by a step derived from the quality
parameter, then DEFLATE-compresses; size is monotonically non-increasing in
q. Decode: exact inverse container unwrap (lossy only through quantization).

Usage:
    python stub_codec.py encode <q> <in.y4m> <out.bin>
    python stub_codec.py decode <in.bin> <out.y4m>
"""

import sys
import zlib

MARKER = b"FRAME\n"


def encode(q, src, dst):
    if q < 0:
        raise SystemExit("quality parameter out of range")
    data = open(src, "rb").read()
    eol = data.find(b"\n")
    header, body = data[: eol + 1], data[eol + 1 :]
    step = max(1, q)
    table = bytes(min(255, (v // step) * step) for v in range(256))
    chunks = [c.translate(table) for c in body.split(MARKER)]
    payload = zlib.compress(MARKER.join(chunks), 9)
    open(dst, "wb").write(b"STUB" + header + payload)


def decode(src, dst):
    data = open(src, "rb").read()
    if not data.startswith(b"STUB"):
        raise SystemExit("not a stub artifact")
    data = data[4:]
    eol = data.find(b"\n")
    open(dst, "wb").write(data[: eol + 1] + zlib.decompress(data[eol + 1 :]))


def main():
    if sys.argv[1] == "encode":
        encode(int(sys.argv[2]), sys.argv[3], sys.argv[4])
    elif sys.argv[1] == "decode":
        decode(sys.argv[2], sys.argv[3])
    else:
        raise SystemExit(f"unknown mode {sys.argv[1]}")


if __name__ == "__main__":
    main()
