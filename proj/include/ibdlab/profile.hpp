#pragma once
// Genotype data model and the two on-disk profile formats:
//   raw profiles  — DTC-export style TSV (rsid, chrom, pos, genotype)
//   canonical profiles — bit-exact serialization with metadata header and a
//                        trailing SHA-256 line; this is what gets signed.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ibdlab/common.hpp"
#include "ibdlab/panel.hpp"
#include "ibdlab/rng.hpp"

namespace ibdlab {

enum class GenotypeCall : std::uint8_t { HomRef = 0, Het = 1, HomAlt = 2, Missing = 3 };

// Packed 2-bit call codes, four calls per byte. Pairwise scans over ~44k
// markers times many pairs dominate the toolkit's runtime.
class CallArray {
public:
    CallArray() = default;
    explicit CallArray(std::size_t n, GenotypeCall fill = GenotypeCall::Missing)
        : n_(n), bytes_((n + 3) / 4, pack_byte(fill)) {}

    std::size_t size() const { return n_; }

    GenotypeCall get(std::size_t i) const {
        return static_cast<GenotypeCall>((bytes_[i >> 2] >> ((i & 3) * 2)) & 3u);
    }

    void set(std::size_t i, GenotypeCall c) {
        const unsigned shift = (i & 3) * 2;
        std::uint8_t& b = bytes_[i >> 2];
        b = static_cast<std::uint8_t>((b & ~(3u << shift)) |
                                      (static_cast<unsigned>(c) << shift));
    }

    bool operator==(const CallArray& other) const {
        return n_ == other.n_ && bytes_ == other.bytes_;
    }

private:
    static std::uint8_t pack_byte(GenotypeCall c) {
        const unsigned v = static_cast<unsigned>(c);
        return static_cast<std::uint8_t>(v | v << 2 | v << 4 | v << 6);
    }
    std::size_t n_ = 0;
    std::vector<std::uint8_t> bytes_;
};

struct GenotypeProfile {
    PanelPtr panel;
    CallArray calls;

    GenotypeProfile() = default;
    explicit GenotypeProfile(PanelPtr p)
        : panel(std::move(p)), calls(panel->size(), GenotypeCall::Missing) {}

    GenotypeCall call(std::size_t i) const { return calls.get(i); }
    std::size_t size() const { return calls.size(); }

    std::size_t missing_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < size(); ++i)
            if (call(i) == GenotypeCall::Missing) ++n;
        return n;
    }
};

// Phased pair of haplotypes; allele 0 = ref, 1 = alt.
struct Diplotype {
    PanelPtr panel;
    std::vector<std::uint8_t> hap0, hap1;

    Diplotype() = default;
    explicit Diplotype(PanelPtr p)
        : panel(std::move(p)), hap0(panel->size(), 0), hap1(panel->size(), 0) {}
};

struct ProfileMetadata {
    std::string profile_id;
    std::string account_id;
    std::string claimed_name;
    std::string claimed_email;
    std::string source_lab_id;
    std::string instrument_id;
    std::int64_t generated_at = 0;  // epoch seconds, UTC

    bool operator==(const ProfileMetadata&) const = default;
};

struct SignedProfile {
    Bytes canonical_bytes;
    Bytes signature;
    std::string key_id;
    std::string scheme_id;
};

// ---------------------------------------------------------------------------
// unphase: collapse a diplotype into unordered genotype calls. The random
// shuffle of the construction procedure only destroys phase bookkeeping; the
// unphased representation is order-free, so the seed cannot affect output.

inline GenotypeProfile unphase(const Diplotype& d, std::uint64_t /*seed*/ = 0) {
    GenotypeProfile g(d.panel);
    for (std::size_t i = 0; i < d.hap0.size(); ++i)
        g.calls.set(i, static_cast<GenotypeCall>(d.hap0[i] + d.hap1[i]));
    return g;
}

// ---------------------------------------------------------------------------
// Raw profile format: `rsid<TAB>chrom<TAB>pos<TAB>genotype`, genotype two
// characters from {A,C,G,T} or `--`; `#` starts a comment line. Markers the
// document does not mention become Missing. rsids not on the panel are
// skipped (exports routinely carry markers a database does not use), but
// every line must still be grammatical and rsids must not repeat.

inline GenotypeProfile parse_raw_profile(std::string_view text, PanelPtr panel) {
    GenotypeProfile g(panel);
    std::unordered_map<std::string, std::size_t> seen;  // rsid -> first line
    std::size_t line_no = 0, start = 0;
    while (start <= text.size()) {
        if (start == text.size()) break;
        std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : nl - start);
        start = (nl == std::string_view::npos) ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line[0] == '#') continue;
        auto f = split_fields(line);
        if (f.size() != 4) throw ParseError("expected 4 tab-separated fields", line_no);
        const std::string& rsid = f[0];
        parse_int(f[1], line_no);  // chrom and pos must at least be integers
        parse_int(f[2], line_no);
        const std::string& gt = f[3];
        if (gt.size() != 2) throw ParseError("genotype must be 2 characters", line_no);
        for (char c : gt)
            if (!is_allele_char(c) && c != '-')
                throw ParseError(std::string("allele character not in {A,C,G,T,-}: '") +
                                     c + "'", line_no);
        const bool missing = (gt == "--");
        if (!missing && (gt[0] == '-' || gt[1] == '-'))
            throw ParseError("half-missing genotype: " + gt, line_no);
        auto [it, inserted] = seen.emplace(rsid, line_no);
        if (!inserted)
            throw ParseError("duplicate rsid " + rsid + " (first seen on line " +
                                 std::to_string(it->second) + ")", line_no);
        std::size_t idx = panel->find(rsid);
        if (idx == SnpPanel::npos) continue;
        if (missing) {
            g.calls.set(idx, GenotypeCall::Missing);
            continue;
        }
        const Marker& m = panel->marker(idx);
        int alt_count = 0;
        for (char c : gt) {
            if (c == m.alt) ++alt_count;
            else if (c != m.ref)
                throw ParseError("allele '" + std::string(1, c) +
                                     "' inconsistent with panel ref/alt for " + rsid,
                                 line_no);
        }
        g.calls.set(idx, static_cast<GenotypeCall>(alt_count));
    }
    return g;
}

inline std::string render_raw_profile(const GenotypeProfile& g,
                                      const std::string& comment = {}) {
    std::string out;
    if (!comment.empty()) out += "# " + comment + "\n";
    char buf[128];
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Marker& m = g.panel->marker(i);
        char a, b;
        switch (g.call(i)) {
            case GenotypeCall::HomRef: a = b = m.ref; break;
            case GenotypeCall::Het: a = m.ref; b = m.alt; break;
            case GenotypeCall::HomAlt: a = b = m.alt; break;
            default: a = b = '-'; break;
        }
        std::snprintf(buf, sizeof buf, "%s\t%d\t%lld\t%c%c\n", m.rsid.c_str(), m.chrom,
                      static_cast<long long>(m.pos), a, b);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Canonical serialization. Fixed field order, markers in panel order, LF
// endings, UTF-8, trailing digest line — two equal (profile, metadata) pairs
// always produce identical bytes, which is what makes signatures meaningful.

namespace detail {
inline const char* kHeaderKeys[] = {
    "profile_id", "account_id", "claimed_name", "claimed_email",
    "source_lab_id", "instrument_id", "generated_at", "panel_digest",
};

inline void require_clean_field(const std::string& v, const char* what) {
    for (char c : v)
        if (c == '\t' || c == '\n' || c == '\r')
            throw Error(std::string("metadata field contains control character: ") + what);
}

inline char call_code(GenotypeCall c) {
    switch (c) {
        case GenotypeCall::HomRef: return '0';
        case GenotypeCall::Het: return '1';
        case GenotypeCall::HomAlt: return '2';
        default: return '.';
    }
}
}  // namespace detail

inline Bytes serialize_canonical(const GenotypeProfile& profile,
                                 const ProfileMetadata& meta) {
    if (!profile.panel || profile.size() != profile.panel->size())
        throw Error("profile does not match its panel");
    detail::require_clean_field(meta.profile_id, "profile_id");
    detail::require_clean_field(meta.account_id, "account_id");
    detail::require_clean_field(meta.claimed_name, "claimed_name");
    detail::require_clean_field(meta.claimed_email, "claimed_email");
    detail::require_clean_field(meta.source_lab_id, "source_lab_id");
    detail::require_clean_field(meta.instrument_id, "instrument_id");

    std::string out;
    out.reserve(profile.size() * 10 + 512);
    const std::string* values[] = {&meta.profile_id, &meta.account_id,
                                   &meta.claimed_name, &meta.claimed_email,
                                   &meta.source_lab_id, &meta.instrument_id};
    for (int i = 0; i < 6; ++i) {
        out += detail::kHeaderKeys[i];
        out += '\t';
        out += *values[i];
        out += '\n';
    }
    out += "generated_at\t";
    out += rfc3339_utc(meta.generated_at);
    out += '\n';
    out += "panel_digest\t";
    out += profile.panel->digest();
    out += '\n';
    for (std::size_t i = 0; i < profile.size(); ++i) {
        out += profile.panel->marker(i).rsid;
        out += '\t';
        out += detail::call_code(profile.call(i));
        out += '\n';
    }
    out += "sha256:";
    out += sha256_hex(std::string_view(out.data(), out.size() - 7));
    out += '\n';
    return Bytes(out.begin(), out.end());
}

inline std::pair<GenotypeProfile, ProfileMetadata> parse_canonical(const Bytes& bytes,
                                                                   PanelPtr panel) {
    std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    if (text.empty()) throw ParseError("truncated input: empty document");

    // The digest line covers every byte before it.
    std::size_t digest_pos = text.rfind("sha256:");
    if (digest_pos == std::string_view::npos ||
        (digest_pos > 0 && text[digest_pos - 1] != '\n'))
        throw ParseError("truncated input: missing digest line");
    std::string_view digest_line = text.substr(digest_pos);
    if (digest_line.size() != 7 + 64 + 1 || digest_line.back() != '\n')
        throw ParseError("malformed digest line");
    std::string_view stated = digest_line.substr(7, 64);
    std::string computed = sha256_hex(text.substr(0, digest_pos));
    if (stated != computed) throw ParseError("checksum mismatch");

    std::string_view body = text.substr(0, digest_pos);
    ProfileMetadata meta;
    GenotypeProfile profile(panel);
    std::size_t line_no = 0, start = 0, header_idx = 0, marker_idx = 0;
    while (start < body.size()) {
        std::size_t nl = body.find('\n', start);
        if (nl == std::string_view::npos) throw ParseError("truncated input: unterminated line");
        std::string_view line = body.substr(start, nl - start);
        start = nl + 1;
        ++line_no;
        std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError("malformed line", line_no);
        std::string key(line.substr(0, tab));
        std::string value(line.substr(tab + 1));
        if (header_idx < 8) {
            if (key != detail::kHeaderKeys[header_idx])
                throw ParseError("header field missing or out of order: expected " +
                                     std::string(detail::kHeaderKeys[header_idx]),
                                 line_no);
            switch (header_idx) {
                case 0: meta.profile_id = value; break;
                case 1: meta.account_id = value; break;
                case 2: meta.claimed_name = value; break;
                case 3: meta.claimed_email = value; break;
                case 4: meta.source_lab_id = value; break;
                case 5: meta.instrument_id = value; break;
                case 6: meta.generated_at = parse_rfc3339_utc(value); break;
                case 7:
                    if (value != panel->digest())
                        throw ParseError("panel digest mismatch", line_no);
                    break;
            }
            ++header_idx;
            continue;
        }
        if (marker_idx >= panel->size())
            throw ParseError("more genotype lines than panel markers", line_no);
        if (key != panel->marker(marker_idx).rsid)
            throw ParseError("genotype lines out of panel order: " + key, line_no);
        if (value.size() != 1) throw ParseError("malformed genotype code", line_no);
        GenotypeCall c;
        switch (value[0]) {
            case '0': c = GenotypeCall::HomRef; break;
            case '1': c = GenotypeCall::Het; break;
            case '2': c = GenotypeCall::HomAlt; break;
            case '.': c = GenotypeCall::Missing; break;
            default: throw ParseError("malformed genotype code", line_no);
        }
        profile.calls.set(marker_idx, c);
        ++marker_idx;
    }
    if (header_idx < 8) throw ParseError("header field missing: truncated header");
    if (marker_idx != panel->size())
        throw ParseError("truncated input: expected " + std::to_string(panel->size()) +
                         " genotype lines, got " + std::to_string(marker_idx));
    return {std::move(profile), std::move(meta)};
}

// Header-only peek used by signature verification, which must not need the
// panel: returns metadata if the first 8 lines parse, nullopt otherwise.
inline std::optional<ProfileMetadata> peek_canonical_metadata(const Bytes& bytes) {
    std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    ProfileMetadata meta;
    std::size_t start = 0;
    for (int header_idx = 0; header_idx < 8; ++header_idx) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) return std::nullopt;
        std::string_view line = text.substr(start, nl - start);
        start = nl + 1;
        std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos) return std::nullopt;
        if (line.substr(0, tab) != detail::kHeaderKeys[header_idx]) return std::nullopt;
        std::string value(line.substr(tab + 1));
        try {
            switch (header_idx) {
                case 0: meta.profile_id = value; break;
                case 1: meta.account_id = value; break;
                case 2: meta.claimed_name = value; break;
                case 3: meta.claimed_email = value; break;
                case 4: meta.source_lab_id = value; break;
                case 5: meta.instrument_id = value; break;
                case 6: meta.generated_at = parse_rfc3339_utc(value); break;
                case 7:
                    if (value.size() != 64) return std::nullopt;
                    break;
            }
        } catch (const ParseError&) {
            return std::nullopt;
        }
    }
    return meta;
}

}  // namespace ibdlab
