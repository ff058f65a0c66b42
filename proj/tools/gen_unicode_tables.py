#!/usr/bin/env python3
"""Regenerates src/unicode_tables.inc from Python's unicodedata.

Emits sorted code point ranges for the punctuation categories (Pc, Pd, Ps,
Pe, Pi, Pf, Po) and single code point lowercase mappings.
"""
import sys
import unicodedata


def ranges(pred):
    out, start, prev = [], None, None
    for cp in range(0x110000):
        if pred(cp):
            if start is None:
                start = cp
            prev = cp
        elif start is not None:
            out.append((start, prev))
            start = None
    if start is not None:
        out.append((start, prev))
    return out


def main(path):
    punct = ranges(lambda cp: unicodedata.category(chr(cp)).startswith("P"))
    lower = []
    for cp in range(0x110000):
        ch = chr(cp)
        lo = ch.lower()
        # keep only 1:1 mappings that are themselves fixed points
        if len(lo) == 1 and lo != ch and lo.lower() == lo:
            lower.append((cp, ord(lo)))
    with open(path, "w") as f:
        f.write("// Generated by tools/gen_unicode_tables.py (Unicode %s). Do not edit.\n"
                % unicodedata.unidata_version)
        f.write("// clang-format off\n")
        f.write("constexpr CodeRange kPunctuationRanges[] = {\n")
        for a, b in punct:
            f.write("    {0x%04X, 0x%04X},\n" % (a, b))
        f.write("};\n\n")
        f.write("constexpr CaseMapping kLowercaseMappings[] = {\n")
        for a, b in lower:
            f.write("    {0x%04X, 0x%04X},\n" % (a, b))
        f.write("};\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/unicode_tables.inc")
