#include "deskmt/unicode.hpp"

#include <algorithm>

#include "deskmt/error.hpp"

namespace deskmt::unicode {

namespace {

struct DecompIndex {
  uint32_t cp;
  uint32_t offset;
  uint32_t length;
};
struct CccEntry {
  uint32_t cp;
  uint8_t ccc;
};
struct CompEntry {
  uint32_t first;
  uint32_t second;
  uint32_t composite;
};

#include "unicode_nfc_data.inc"

constexpr uint32_t kHangulSBase = 0xAC00;
constexpr uint32_t kHangulLBase = 0x1100;
constexpr uint32_t kHangulVBase = 0x1161;
constexpr uint32_t kHangulTBase = 0x11A7;
constexpr uint32_t kHangulLCount = 19;
constexpr uint32_t kHangulVCount = 21;
constexpr uint32_t kHangulTCount = 28;
constexpr uint32_t kHangulNCount = kHangulVCount * kHangulTCount;
constexpr uint32_t kHangulSCount = kHangulLCount * kHangulNCount;

uint8_t ccc_of(uint32_t cp) {
  const CccEntry* begin = kCccTable;
  const CccEntry* end = kCccTable + sizeof(kCccTable) / sizeof(kCccTable[0]);
  auto it = std::lower_bound(begin, end, cp, [](const CccEntry& e, uint32_t c) { return e.cp < c; });
  return (it != end && it->cp == cp) ? it->ccc : 0;
}

const DecompIndex* find_decomp(uint32_t cp) {
  const DecompIndex* begin = kDecompIndex;
  const DecompIndex* end = kDecompIndex + sizeof(kDecompIndex) / sizeof(kDecompIndex[0]);
  auto it = std::lower_bound(begin, end, cp, [](const DecompIndex& e, uint32_t c) { return e.cp < c; });
  return (it != end && it->cp == cp) ? &*it : nullptr;
}

uint32_t compose_pair(uint32_t a, uint32_t b) {
  // Hangul LV / LVT composition.
  if (a >= kHangulLBase && a < kHangulLBase + kHangulLCount && b >= kHangulVBase &&
      b < kHangulVBase + kHangulVCount) {
    return kHangulSBase + ((a - kHangulLBase) * kHangulVCount + (b - kHangulVBase)) * kHangulTCount;
  }
  if (a >= kHangulSBase && a < kHangulSBase + kHangulSCount && (a - kHangulSBase) % kHangulTCount == 0 &&
      b > kHangulTBase && b < kHangulTBase + kHangulTCount) {
    return a + (b - kHangulTBase);
  }
  const CompEntry* begin = kCompTable;
  const CompEntry* end = kCompTable + sizeof(kCompTable) / sizeof(kCompTable[0]);
  auto it = std::lower_bound(begin, end, std::pair<uint32_t, uint32_t>(a, b),
                             [](const CompEntry& e, const std::pair<uint32_t, uint32_t>& k) {
                               return e.first != k.first ? e.first < k.first : e.second < k.second;
                             });
  return (it != end && it->first == a && it->second == b) ? it->composite : 0;
}

void decompose_cp(uint32_t cp, std::vector<uint32_t>& out) {
  if (cp >= kHangulSBase && cp < kHangulSBase + kHangulSCount) {
    const uint32_t s = cp - kHangulSBase;
    out.push_back(kHangulLBase + s / kHangulNCount);
    out.push_back(kHangulVBase + (s % kHangulNCount) / kHangulTCount);
    if (s % kHangulTCount != 0) out.push_back(kHangulTBase + s % kHangulTCount);
    return;
  }
  if (const DecompIndex* d = find_decomp(cp)) {
    for (uint32_t i = 0; i < d->length; ++i) out.push_back(kDecompPool[d->offset + i]);
    return;
  }
  out.push_back(cp);
}

}  // namespace

std::vector<uint32_t> decode_utf8(std::string_view s) {
  std::vector<uint32_t> cps;
  cps.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    const uint8_t b0 = static_cast<uint8_t>(s[i]);
    uint32_t cp = 0;
    size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      throw DataError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > s.size()) throw DataError("truncated UTF-8 sequence at offset " + std::to_string(i));
    for (size_t k = 1; k < len; ++k) {
      const uint8_t b = static_cast<uint8_t>(s[i + k]);
      if ((b & 0xC0) != 0x80) throw DataError("invalid UTF-8 continuation at offset " + std::to_string(i + k));
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr uint32_t kMinByLen[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (len > 1 && cp < kMinByLen[len]) throw DataError("overlong UTF-8 encoding at offset " + std::to_string(i));
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      throw DataError("invalid code point at offset " + std::to_string(i));
    cps.push_back(cp);
    i += len;
  }
  return cps;
}

bool valid_utf8(std::string_view s) {
  try {
    decode_utf8(s);
    return true;
  } catch (const DataError&) {
    return false;
  }
}

void append_utf8(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(const std::vector<uint32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (uint32_t cp : cps) append_utf8(out, cp);
  return out;
}

std::string nfc(std::string_view s) {
  std::vector<uint32_t> in = decode_utf8(s);

  // Decompose, then canonical-order combining marks (stable sort by ccc).
  std::vector<uint32_t> d;
  d.reserve(in.size());
  for (uint32_t cp : in) decompose_cp(cp, d);
  for (size_t i = 1; i < d.size(); ++i) {
    const uint8_t cc = ccc_of(d[i]);
    if (cc == 0) continue;
    size_t j = i;
    while (j > 0 && ccc_of(d[j - 1]) > cc) {
      std::swap(d[j - 1], d[j]);
      --j;
    }
  }

  // Canonical composition.
  std::vector<uint32_t> out;
  out.reserve(d.size());
  ptrdiff_t last_starter = -1;
  uint8_t prev_cc = 0;
  for (uint32_t cp : d) {
    const uint8_t cc = ccc_of(cp);
    if (last_starter >= 0 && (prev_cc < cc || prev_cc == 0)) {
      if (uint32_t comp = compose_pair(out[last_starter], cp); comp != 0) {
        out[last_starter] = comp;
        continue;  // prev_cc unchanged: cp was absorbed
      }
    }
    if (cc == 0) {
      last_starter = static_cast<ptrdiff_t>(out.size());
      prev_cc = 0;
    } else {
      prev_cc = cc;
    }
    out.push_back(cp);
  }
  return encode_utf8(out);
}

std::vector<std::string> split_code_points(std::string_view s) {
  std::vector<std::string> out;
  for (uint32_t cp : decode_utf8(s)) {
    std::string c;
    append_utf8(c, cp);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace deskmt::unicode
