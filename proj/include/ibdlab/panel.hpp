#pragma once
// Marker panel: the ordered autosomal SNP set every profile is called
// against, with physical (bp) and genetic (cM) coordinates.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ibdlab/common.hpp"

namespace ibdlab {

constexpr int kAutosomes = 22;

struct Marker {
    std::string rsid;
    int chrom = 0;            // 1..22
    std::int64_t pos = 0;     // base pairs, >= 1
    double cm = 0.0;          // genetic position, centimorgans
    char ref = 'A';
    char alt = 'G';
};

inline bool is_allele_char(char c) {
    return c == 'A' || c == 'C' || c == 'G' || c == 'T';
}

class SnpPanel {
public:
    SnpPanel(std::vector<Marker> markers, std::vector<double> alt_freq = {})
        : markers_(std::move(markers)), alt_freq_(std::move(alt_freq)) {
        build_index();
        validate();
        definition_ = render_definition();
        digest_ = sha256_hex(definition_);
    }

    std::size_t size() const { return markers_.size(); }
    const Marker& marker(std::size_t i) const { return markers_[i]; }
    const std::vector<Marker>& markers() const { return markers_; }

    bool has_freqs() const { return !alt_freq_.empty(); }
    // Alt-allele frequency; 0.5 when the panel was loaded without one.
    double alt_freq(std::size_t i) const { return alt_freq_.empty() ? 0.5 : alt_freq_[i]; }
    const std::vector<double>& alt_freqs() const { return alt_freq_; }

    // Markers of chromosome c occupy indices [chrom_begin(c), chrom_end(c)).
    std::size_t chrom_begin(int c) const { return ranges_[c].first; }
    std::size_t chrom_end(int c) const { return ranges_[c].second; }
    bool chrom_present(int c) const { return ranges_[c].second > ranges_[c].first; }

    double chrom_span_cm(int c) const {
        if (!chrom_present(c)) return 0.0;
        return markers_[ranges_[c].second - 1].cm - markers_[ranges_[c].first].cm;
    }

    double total_cm() const {
        double total = 0.0;
        for (int c = 1; c <= kAutosomes; ++c) total += chrom_span_cm(c);
        return total;
    }

    // Index of rsid, or npos.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t find(const std::string& rsid) const {
        auto it = rsid_index_.find(rsid);
        return it == rsid_index_.end() ? npos : it->second;
    }

    // First marker on chromosome c with genetic position >= x (clamped to the
    // chromosome's index range).
    std::size_t lower_bound_cm(int c, double x) const {
        auto begin = markers_.begin() + static_cast<std::ptrdiff_t>(chrom_begin(c));
        auto end = markers_.begin() + static_cast<std::ptrdiff_t>(chrom_end(c));
        auto it = std::lower_bound(begin, end, x,
                                   [](const Marker& m, double v) { return m.cm < v; });
        return static_cast<std::size_t>(it - markers_.begin());
    }

    // Canonical 6-column definition text; its SHA-256 identifies the panel in
    // canonical profile headers.
    const std::string& definition_text() const { return definition_; }
    const std::string& digest() const { return digest_; }

    bool same_panel(const SnpPanel& other) const {
        return this == &other || digest_ == other.digest_;
    }

    static SnpPanel parse_definition(std::string_view text,
                                     std::vector<double> alt_freq = {});

private:
    void build_index() {
        ranges_.assign(kAutosomes + 1, {0, 0});
        rsid_index_.reserve(markers_.size() * 2);
        for (std::size_t i = 0; i < markers_.size(); ++i)
            rsid_index_.emplace(markers_[i].rsid, i);
        std::size_t i = 0;
        for (int c = 1; c <= kAutosomes; ++c) {
            std::size_t begin = i;
            while (i < markers_.size() && markers_[i].chrom == c) ++i;
            ranges_[c] = {begin, i};
        }
    }

    void validate() const {
        if (markers_.empty()) throw Error("panel has no markers");
        if (!alt_freq_.empty() && alt_freq_.size() != markers_.size())
            throw Error("allele frequency vector length mismatch");
        if (rsid_index_.size() != markers_.size()) throw Error("duplicate rsid in panel");
        int prev_chrom = 0;
        for (std::size_t i = 0; i < markers_.size(); ++i) {
            const Marker& m = markers_[i];
            if (m.chrom < 1 || m.chrom > kAutosomes)
                throw Error("marker chromosome out of range: " + m.rsid);
            if (m.pos < 1) throw Error("marker position must be >= 1: " + m.rsid);
            if (m.cm < 0.0) throw Error("negative genetic position: " + m.rsid);
            if (!is_allele_char(m.ref) || !is_allele_char(m.alt) || m.ref == m.alt)
                throw Error("bad ref/alt alleles: " + m.rsid);
            if (m.chrom < prev_chrom) throw Error("markers not sorted by chromosome");
            if (m.chrom == prev_chrom) {
                const Marker& p = markers_[i - 1];
                if (m.pos <= p.pos)
                    throw Error("positions not strictly increasing: " + m.rsid);
                if (m.cm < p.cm)
                    throw Error("genetic positions decrease: " + m.rsid);
            }
            prev_chrom = m.chrom;
        }
        for (int c = 1; c <= kAutosomes; ++c)
            if (chrom_present(c) && chrom_span_cm(c) <= 0.0)
                throw Error("chromosome " + std::to_string(c) + " has zero genetic length");
    }

    std::string render_definition() const {
        std::string out;
        out.reserve(markers_.size() * 40);
        char buf[160];
        for (const Marker& m : markers_) {
            std::snprintf(buf, sizeof buf, "%s\t%d\t%lld\t%.6f\t%c\t%c\n",
                          m.rsid.c_str(), m.chrom, static_cast<long long>(m.pos),
                          m.cm, m.ref, m.alt);
            out += buf;
        }
        return out;
    }

    std::vector<Marker> markers_;
    std::vector<double> alt_freq_;
    std::vector<std::pair<std::size_t, std::size_t>> ranges_;
    std::unordered_map<std::string, std::size_t> rsid_index_;
    std::string definition_;
    std::string digest_;
};

using PanelPtr = std::shared_ptr<const SnpPanel>;

inline SnpPanel SnpPanel::parse_definition(std::string_view text,
                                           std::vector<double> alt_freq) {
    std::vector<Marker> markers;
    std::size_t line_no = 0, start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : nl - start);
        start = (nl == std::string_view::npos) ? text.size() : nl + 1;
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto f = split_fields(line);
        if (f.size() != 6) throw ParseError("panel line needs 6 fields", line_no);
        Marker m;
        m.rsid = f[0];
        m.chrom = static_cast<int>(parse_int(f[1], line_no));
        m.pos = parse_int(f[2], line_no);
        m.cm = parse_real(f[3], line_no);
        if (f[4].size() != 1 || f[5].size() != 1)
            throw ParseError("ref/alt must be single characters", line_no);
        m.ref = f[4][0];
        m.alt = f[5][0];
        markers.push_back(std::move(m));
    }
    return SnpPanel(std::move(markers), std::move(alt_freq));
}

// freqs.tsv: rsid<TAB>alt_freq, panel order.
inline std::string render_freqs(const SnpPanel& panel) {
    std::string out;
    char buf[96];
    for (std::size_t i = 0; i < panel.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s\t%.6f\n", panel.marker(i).rsid.c_str(),
                      panel.alt_freq(i));
        out += buf;
    }
    return out;
}

inline std::vector<double> parse_freqs(std::string_view text, const SnpPanel& panel) {
    std::vector<double> freqs(panel.size(), 0.5);
    std::vector<bool> seen(panel.size(), false);
    std::size_t line_no = 0, start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : nl - start);
        start = (nl == std::string_view::npos) ? text.size() : nl + 1;
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto f = split_fields(line);
        if (f.size() != 2) throw ParseError("freqs line needs 2 fields", line_no);
        std::size_t idx = panel.find(f[0]);
        if (idx == SnpPanel::npos) throw ParseError("unknown rsid: " + f[0], line_no);
        freqs[idx] = parse_real(f[1], line_no);
        seen[idx] = true;
    }
    for (std::size_t i = 0; i < panel.size(); ++i)
        if (!seen[i]) throw ParseError("missing frequency for " + panel.marker(i).rsid);
    return freqs;
}

}  // namespace ibdlab
