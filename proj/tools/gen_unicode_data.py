#!/usr/bin/env python3
"""Regenerates src/unicode_nfc_data.inc from Python's unicodedata.

The tables drive the NFC normalizer in src/unicode.cpp:
  - full canonical decompositions (Hangul handled algorithmically at runtime)
  - non-zero canonical combining classes
  - primary composite pairs (composition exclusions already filtered out)

Run from the repository root:  python3 tools/gen_unicode_data.py
"""

import sys
import unicodedata


def full_canonical_decomposition(cp, cache):
    if cp in cache:
        return cache[cp]
    ch = chr(cp)
    decomp = unicodedata.decomposition(ch)
    if not decomp or decomp.startswith("<"):
        cache[cp] = [cp]
        return [cp]
    parts = [int(p, 16) for p in decomp.split()]
    out = []
    for p in parts:
        out.extend(full_canonical_decomposition(p, cache))
    cache[cp] = out
    return out


def main():
    hangul_s_base, hangul_s_count = 0xAC00, 11172

    cache = {}
    decomp_entries = []  # (cp, [cps...])
    ccc_entries = []  # (cp, ccc)
    comp_entries = []  # (first, second, composite)

    for cp in range(0x110000):
        if hangul_s_base <= cp < hangul_s_base + hangul_s_count:
            continue
        ch = chr(cp)
        ccc = unicodedata.combining(ch)
        if ccc != 0:
            ccc_entries.append((cp, ccc))
        d = unicodedata.decomposition(ch)
        if d and not d.startswith("<"):
            seq = full_canonical_decomposition(cp, cache)
            decomp_entries.append((cp, seq))
            direct = [int(p, 16) for p in d.split()]
            if len(direct) == 2 and unicodedata.combining(chr(direct[0])) == 0:
                # primary composite iff NFC maps the pair back to cp
                if unicodedata.normalize("NFC", "".join(chr(p) for p in direct)) == ch:
                    comp_entries.append((direct[0], direct[1], cp))

    pool = []
    index = []  # (cp, offset, length)
    for cp, seq in decomp_entries:
        index.append((cp, len(pool), len(seq)))
        pool.extend(seq)

    out = sys.stdout
    out.write("// Generated by tools/gen_unicode_data.py -- do not edit.\n")
    out.write(f"// Unicode data version {unicodedata.unidata_version}\n\n")

    out.write(f"static const DecompIndex kDecompIndex[{len(index)}] = {{\n")
    for cp, off, n in index:
        out.write(f"  {{0x{cp:X}, {off}, {n}}},\n")
    out.write("};\n\n")

    out.write(f"static const uint32_t kDecompPool[{len(pool)}] = {{\n")
    for i in range(0, len(pool), 12):
        out.write("  " + ", ".join(f"0x{v:X}" for v in pool[i : i + 12]) + ",\n")
    out.write("};\n\n")

    out.write(f"static const CccEntry kCccTable[{len(ccc_entries)}] = {{\n")
    for cp, ccc in ccc_entries:
        out.write(f"  {{0x{cp:X}, {ccc}}},\n")
    out.write("};\n\n")

    comp_entries.sort()
    out.write(f"static const CompEntry kCompTable[{len(comp_entries)}] = {{\n")
    for a, b, c in comp_entries:
        out.write(f"  {{0x{a:X}, 0x{b:X}, 0x{c:X}}},\n")
    out.write("};\n")


if __name__ == "__main__":
    main()
