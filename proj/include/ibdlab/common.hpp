#pragma once
// Shared plumbing: error types, SHA-256 / hex / base64 wrappers, RFC 3339
// timestamps, small hashing utilities, file I/O helpers.

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <sodium.h>

namespace ibdlab {

using Bytes = std::vector<std::uint8_t>;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Parse failure with a 1-based line position where applicable (0 = n/a).
struct ParseError : Error {
    std::size_t line = 0;
    ParseError(const std::string& msg, std::size_t line_no = 0)
        : Error(line_no ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
};

inline void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) throw Error("libsodium initialization failed");
}

using Sha256 = std::array<std::uint8_t, 32>;

inline Sha256 sha256(const void* data, std::size_t len) {
    ensure_sodium();
    Sha256 out{};
    crypto_hash_sha256(out.data(), static_cast<const unsigned char*>(data), len);
    return out;
}

inline Sha256 sha256(std::string_view s) { return sha256(s.data(), s.size()); }
inline Sha256 sha256(const Bytes& b) { return sha256(b.data(), b.size()); }

inline std::string to_hex(const std::uint8_t* data, std::size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xf]);
    }
    return out;
}

inline std::string to_hex(const Sha256& h) { return to_hex(h.data(), h.size()); }
inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }

inline std::string sha256_hex(std::string_view s) { return to_hex(sha256(s)); }
inline std::string sha256_hex(const Bytes& b) { return to_hex(sha256(b)); }

inline Bytes from_hex(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) throw ParseError("odd-length hex string");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]), lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw ParseError("invalid hex character");
        out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return out;
}

inline std::string to_base64(const Bytes& b) {
    ensure_sodium();
    std::string out(sodium_base64_encoded_len(b.size(), sodium_base64_VARIANT_ORIGINAL), '\0');
    sodium_bin2base64(out.data(), out.size(), b.data(), b.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(out.find('\0') == std::string::npos ? out.size() : out.find('\0'));
    return out;
}

inline Bytes from_base64(std::string_view s) {
    ensure_sodium();
    Bytes out(s.size());  // decoded size is always smaller
    std::size_t written = 0;
    if (sodium_base642bin(out.data(), out.size(), s.data(), s.size(), nullptr, &written,
                          nullptr, sodium_base64_VARIANT_ORIGINAL) != 0)
        throw ParseError("invalid base64");
    out.resize(written);
    return out;
}

// ---------------------------------------------------------------------------
// RFC 3339 UTC timestamps at second precision ("2020-01-01T00:00:00Z").
// Civil-date conversions are done directly so results never depend on the
// host locale or time zone database.

inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);                  // [0, 399]
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;        // [0, 365]
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;                 // [0, 146096]
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

inline std::string rfc3339_utc(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) { rem += 86400; days -= 1; }
    std::int64_t y; unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d,
                  static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem / 60 % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

inline std::int64_t parse_rfc3339_utc(std::string_view s) {
    int y, mo, d, h, mi, se;
    char tz;
    if (s.size() != 20 ||
        std::sscanf(std::string(s).c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c",
                    &y, &mo, &d, &h, &mi, &se, &tz) != 7 ||
        tz != 'Z' || mo < 1 || mo > 12 || d < 1 || d > 31 ||
        h > 23 || mi > 59 || se > 60)
        throw ParseError("invalid RFC 3339 UTC timestamp: " + std::string(s));
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
           h * 3600 + mi * 60 + se;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Whole-file I/O

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + path);
}

inline std::vector<std::string> split_fields(std::string_view line, char sep = '\t') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

// Strict non-negative integer parse; throws ParseError on trailing junk.
inline std::int64_t parse_int(std::string_view s, std::size_t line_no = 0) {
    if (s.empty()) throw ParseError("empty integer field", line_no);
    std::int64_t v = 0;
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) throw ParseError("malformed integer: " + std::string(s), line_no);
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9')
            throw ParseError("malformed integer: " + std::string(s), line_no);
        v = v * 10 + (s[i] - '0');
    }
    return s[0] == '-' ? -v : v;
}

inline double parse_real(std::string_view s, std::size_t line_no = 0) {
    try {
        std::size_t used = 0;
        double v = std::stod(std::string(s), &used);
        if (used != s.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ParseError("malformed real number: " + std::string(s), line_no);
    }
}

}  // namespace ibdlab
