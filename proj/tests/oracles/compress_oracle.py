#!/usr/bin/env python3
"""Compressed sizes of concatenated chain DER with the reference libraries.

usage: compress_oracle.py FILE...
prints: path zlib brotli zstd original
"""
import re
import ssl
import sys
import zlib

import brotli
import zstandard


def chain_der(path):
    data = open(path, "rb").read()
    blocks = re.findall(rb"-----BEGIN CERTIFICATE-----.*?-----END CERTIFICATE-----", data, re.S)
    return b"".join(ssl.PEM_cert_to_DER_cert(b.decode()) for b in blocks) if blocks else data


def main():
    for path in sys.argv[1:]:
        der = chain_der(path)
        z = zlib.compress(der, 9)
        b = brotli.compress(der, mode=brotli.MODE_GENERIC, quality=11, lgwin=22)
        s = zstandard.ZstdCompressor(level=19).compress(der)
        print(path, len(z), len(b), len(s), len(der))


if __name__ == "__main__":
    main()
