#pragma once
// IBD segment detection on unphased genotypes (opposite-homozygote
// exclusion), the label-based ground-truth oracle, and relationship
// classification from total sharing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "ibdlab/common.hpp"
#include "ibdlab/panel.hpp"
#include "ibdlab/popsim.hpp"
#include "ibdlab/profile.hpp"

namespace ibdlab {

enum class SegmentKind : std::uint8_t { Half, Full };

struct IbdSegment {
    int chrom = 0;
    std::uint32_t start = 0, end = 0;  // marker indices, inclusive
    double start_cm = 0.0, end_cm = 0.0;
    SegmentKind kind = SegmentKind::Half;

    double length_cm() const { return end_cm - start_cm; }
    std::uint32_t n_markers() const { return end - start + 1; }
};

enum class RelationshipDegree : int {
    Identical = 0,
    ParentChild,
    FullSibling,
    Degree2,   // grandparent / avuncular / half sibling
    Degree3,   // ~1st cousin
    Degree4,
    Degree5,   // ~2nd cousin
    Degree6,
    Degree7,   // ~3rd cousin
    DistantOrUnrelated,
};

inline const char* to_string(RelationshipDegree d) {
    switch (d) {
        case RelationshipDegree::Identical: return "Identical";
        case RelationshipDegree::ParentChild: return "ParentChild";
        case RelationshipDegree::FullSibling: return "FullSibling";
        case RelationshipDegree::Degree2: return "Degree2";
        case RelationshipDegree::Degree3: return "Degree3";
        case RelationshipDegree::Degree4: return "Degree4";
        case RelationshipDegree::Degree5: return "Degree5";
        case RelationshipDegree::Degree6: return "Degree6";
        case RelationshipDegree::Degree7: return "Degree7";
        default: return "DistantOrUnrelated";
    }
}

inline RelationshipDegree degree_from_string(const std::string& s) {
    for (int i = 0; i <= static_cast<int>(RelationshipDegree::DistantOrUnrelated); ++i) {
        auto d = static_cast<RelationshipDegree>(i);
        if (s == to_string(d)) return d;
    }
    throw ParseError("unknown relationship degree: " + s);
}

// Genealogical rank used for tolerance arithmetic: parent/child and full
// siblings are both 1st-degree relatives.
inline int degree_rank(RelationshipDegree d) {
    switch (d) {
        case RelationshipDegree::Identical: return 0;
        case RelationshipDegree::ParentChild: return 1;
        case RelationshipDegree::FullSibling: return 1;
        case RelationshipDegree::DistantOrUnrelated: return Pedigree::kUnrelatedRank;
        default: return static_cast<int>(d) - static_cast<int>(RelationshipDegree::Degree2) + 2;
    }
}

// Expected shared-DNA fraction (diploid scale) at genealogical rank k >= 2.
inline double expected_sharing_fraction(int rank) { return std::pow(2.0, -rank); }

struct DetectorParams {
    std::uint32_t min_markers = 200;
    double min_cm = 12.0;
    std::uint32_t max_opposite_homozygotes_per_window = 0;
    std::uint32_t full_min_markers = 200;
    double full_min_cm = 12.0;

    void validate() const {
        if (min_markers == 0 || full_min_markers == 0 || min_cm < 0.0 || full_min_cm < 0.0)
            throw Error("detector thresholds must be positive");
    }
};

namespace detail {

inline bool opposite_homozygous(GenotypeCall a, GenotypeCall b) {
    return (a == GenotypeCall::HomRef && b == GenotypeCall::HomAlt) ||
           (a == GenotypeCall::HomAlt && b == GenotypeCall::HomRef);
}

struct Run { std::size_t begin, end; };  // half-open marker index range

// Collects kept segments of `kind` from candidate runs, trimming each run to
// the outermost informative markers first.
template <typename Informative>
inline void keep_runs(const std::vector<Run>& runs, const SnpPanel& panel, int chrom,
                      std::uint32_t min_markers, double min_cm, SegmentKind kind,
                      Informative informative, std::vector<IbdSegment>& out) {
    for (const Run& r : runs) {
        std::size_t i = r.begin, j = r.end;
        while (i < j && !informative(i)) ++i;
        while (j > i && !informative(j - 1)) --j;
        if (i >= j) continue;
        IbdSegment seg;
        seg.chrom = chrom;
        seg.start = static_cast<std::uint32_t>(i);
        seg.end = static_cast<std::uint32_t>(j - 1);
        seg.start_cm = panel.marker(i).cm;
        seg.end_cm = panel.marker(j - 1).cm;
        seg.kind = kind;
        if (seg.n_markers() >= min_markers && seg.length_cm() >= min_cm)
            out.push_back(seg);
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Ground-truth oracle: segments where founder-origin labels coincide. Half =
// exactly one (hap_a, hap_b) pair shares an origin; Full = two disjoint pairs
// do. Thresholds from `params` apply; pass zeroed-down params to measure raw
// sharing.

inline std::vector<IbdSegment> true_ibd_segments(const LabeledDiplotype& a,
                                                 const LabeledDiplotype& b,
                                                 const SnpPanel& panel,
                                                 const DetectorParams& params) {
    params.validate();
    const std::size_t n = panel.size();
    if (a.d.hap0.size() != n || b.d.hap0.size() != n)
        throw Error("diplotypes are not on the given panel");
    auto a0 = expand_labels(a.labels0, n), a1 = expand_labels(a.labels1, n);
    auto b0 = expand_labels(b.labels0, n), b1 = expand_labels(b.labels1, n);

    std::vector<IbdSegment> out;
    for (int c = 1; c <= kAutosomes; ++c) {
        if (!panel.chrom_present(c)) continue;
        const std::size_t lo = panel.chrom_begin(c), hi = panel.chrom_end(c);
        auto state = [&](std::size_t m) -> int {
            const bool m00 = a0[m] == b0[m], m01 = a0[m] == b1[m];
            const bool m10 = a1[m] == b0[m], m11 = a1[m] == b1[m];
            if ((m00 && m11) || (m01 && m10)) return 2;
            if (m00 || m01 || m10 || m11) return 1;
            return 0;
        };
        std::size_t run_start = lo;
        int run_state = state(lo);
        auto flush = [&](std::size_t end) {
            if (run_state == 0 || end <= run_start) return;
            std::vector<detail::Run> runs{{run_start, end}};
            if (run_state == 1)
                detail::keep_runs(runs, panel, c, params.min_markers, params.min_cm,
                                  SegmentKind::Half, [](std::size_t) { return true; }, out);
            else
                detail::keep_runs(runs, panel, c, params.full_min_markers, params.full_min_cm,
                                  SegmentKind::Full, [](std::size_t) { return true; }, out);
        };
        for (std::size_t m = lo + 1; m < hi; ++m) {
            int s = state(m);
            if (s != run_state) {
                flush(m);
                run_start = m;
                run_state = s;
            }
        }
        flush(hi);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Detector. Half candidates are maximal runs free of opposite-homozygote
// sites (Missing is transparent), trimmed to the outermost markers where both
// profiles have calls. Within each kept run, Full sub-segments are maximal
// runs of identical non-Missing genotype. A Full segment that covers its
// entire Half run replaces it — that is what makes a self-match total
// (half, full) = (0, L) and S = 2L.

inline std::vector<IbdSegment> detect_ibd(const GenotypeProfile& ga,
                                          const GenotypeProfile& gb,
                                          const SnpPanel& panel,
                                          const DetectorParams& params) {
    params.validate();
    if (!ga.panel->same_panel(panel) || !gb.panel->same_panel(panel))
        throw Error("profiles are not on the given panel");
    if (ga.size() != panel.size() || gb.size() != panel.size())
        throw Error("profile length does not match panel");

    std::vector<IbdSegment> out;
    for (int c = 1; c <= kAutosomes; ++c) {
        if (!panel.chrom_present(c)) continue;
        const std::size_t lo = panel.chrom_begin(c), hi = panel.chrom_end(c);

        // Maximal zero-OH stretches; the OH marker itself belongs to no run.
        std::vector<detail::Run> zero_oh;
        std::size_t start = lo;
        for (std::size_t m = lo; m < hi; ++m) {
            if (detail::opposite_homozygous(ga.call(m), gb.call(m))) {
                if (m > start) zero_oh.push_back({start, m});
                start = m + 1;
            }
        }
        if (hi > start) zero_oh.push_back({start, hi});

        // Error-tolerance knob: merge adjacent runs across OH sites while a
        // merged run holds at most `k` of them (greedy left to right).
        std::vector<detail::Run> candidates;
        std::vector<std::uint32_t> oh_used;
        const std::uint32_t k = params.max_opposite_homozygotes_per_window;
        for (const detail::Run& r : zero_oh) {
            if (!candidates.empty() && k > 0) {
                detail::Run& prev = candidates.back();
                // Markers between prev.end and r.begin are all OH sites.
                const std::uint32_t gap = static_cast<std::uint32_t>(r.begin - prev.end);
                if (oh_used.back() + gap <= k) {
                    prev.end = r.end;
                    oh_used.back() += gap;
                    continue;
                }
            }
            candidates.push_back(r);
            oh_used.push_back(0);
        }

        auto both_called = [&](std::size_t m) {
            return ga.call(m) != GenotypeCall::Missing && gb.call(m) != GenotypeCall::Missing;
        };
        std::vector<IbdSegment> halves;
        detail::keep_runs(candidates, panel, c, params.min_markers, params.min_cm,
                          SegmentKind::Half, both_called, halves);

        for (const IbdSegment& half : halves) {
            // Full sub-runs: identical-call stretches; Missing never breaks them.
            std::vector<detail::Run> ident;
            std::size_t s = half.start;
            for (std::size_t m = half.start; m <= half.end; ++m) {
                if (both_called(m) && ga.call(m) != gb.call(m)) {
                    if (m > s) ident.push_back({s, m});
                    s = m + 1;
                }
            }
            if (half.end + 1 > s) ident.push_back({s, half.end + 1});
            std::vector<IbdSegment> fulls;
            detail::keep_runs(ident, panel, c, params.full_min_markers, params.full_min_cm,
                              SegmentKind::Full,
                              [&](std::size_t m) { return both_called(m) && ga.call(m) == gb.call(m); },
                              fulls);
            const bool coincident = fulls.size() == 1 && fulls[0].start == half.start &&
                                    fulls[0].end == half.end;
            if (!coincident) out.push_back(half);
            out.insert(out.end(), fulls.begin(), fulls.end());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Totals and classification

struct MatchTotals {
    double half_cm = 0.0;
    double full_cm = 0.0;
    double score = 0.0;  // S = half + 2*full
};

inline MatchTotals summarize_match(const std::vector<IbdSegment>& segments,
                                   const SnpPanel& panel) {
    // Same-kind segments must not overlap.
    std::vector<const IbdSegment*> by_kind[2];
    for (const auto& s : segments) {
        if (s.end < s.start || s.end >= panel.size())
            throw Error("segment marker range invalid");
        by_kind[static_cast<int>(s.kind)].push_back(&s);
    }
    for (auto& list : by_kind) {
        std::sort(list.begin(), list.end(), [](const IbdSegment* a, const IbdSegment* b) {
            return std::tie(a->chrom, a->start) < std::tie(b->chrom, b->start);
        });
        for (std::size_t i = 1; i < list.size(); ++i)
            if (list[i]->chrom == list[i - 1]->chrom && list[i]->start <= list[i - 1]->end)
                throw Error("overlapping segments of the same kind");
    }
    MatchTotals t;
    for (const auto& s : segments)
        (s.kind == SegmentKind::Half ? t.half_cm : t.full_cm) += s.length_cm();
    t.score = t.half_cm + 2.0 * t.full_cm;
    return t;
}

// Degree ladder: expected shared fraction f_k = 2^(-k) on the diploid scale
// (f = S / (2 * panel length)), bands split at geometric midpoints f_k * 2^(1/2).
inline RelationshipDegree classify_relationship(double total_half_cm, double total_full_cm,
                                                double panel_length_cm) {
    if (panel_length_cm <= 0.0) throw Error("panel length must be positive");
    if (total_half_cm < 0.0 || total_full_cm < 0.0)
        throw Error("negative sharing totals");
    if (total_half_cm > panel_length_cm * (1.0 + 1e-9))
        throw Error("half-IBD total exceeds panel length");
    const double h = total_half_cm / panel_length_cm;
    const double phi = total_full_cm / panel_length_cm;
    if (phi >= 0.95) return RelationshipDegree::Identical;
    if (h >= 0.95 && phi < 0.10) return RelationshipDegree::ParentChild;
    if (h >= 0.35 && phi >= 0.10) return RelationshipDegree::FullSibling;
    const double f = 0.5 * h + phi;
    const double root2 = std::sqrt(2.0);
    for (int k = 2; k <= 7; ++k)
        if (f >= expected_sharing_fraction(k) / root2)
            return static_cast<RelationshipDegree>(static_cast<int>(RelationshipDegree::Degree2) + k - 2);
    return RelationshipDegree::DistantOrUnrelated;
}

// ---------------------------------------------------------------------------
// Ranked all-pairs query

struct MatchResult {
    std::string query_id;
    std::string other_id;
    std::vector<IbdSegment> segments;
    double total_half_cm = 0.0;
    double total_full_cm = 0.0;
    double score = 0.0;
    RelationshipDegree predicted = RelationshipDegree::DistantOrUnrelated;
};

inline MatchResult match_pair(const std::string& query_id, const GenotypeProfile& query,
                              const std::string& other_id, const GenotypeProfile& other,
                              const SnpPanel& panel, const DetectorParams& params) {
    MatchResult r;
    r.query_id = query_id;
    r.other_id = other_id;
    r.segments = detect_ibd(query, other, panel, params);
    MatchTotals t = summarize_match(r.segments, panel);
    r.total_half_cm = t.half_cm;
    r.total_full_cm = t.full_cm;
    r.score = t.score;
    r.predicted = classify_relationship(t.half_cm, t.full_cm, panel.total_cm());
    return r;
}

// Results with S > 0, sorted by descending S then ascending profile id,
// truncated to top_k.
inline std::vector<MatchResult> query_all(
    const std::string& query_id, const GenotypeProfile& query,
    const std::vector<std::pair<std::string, const GenotypeProfile*>>& cohort,
    const SnpPanel& panel, const DetectorParams& params, std::size_t top_k) {
    std::vector<MatchResult> results;
    for (const auto& [id, profile] : cohort) {
        MatchResult r = match_pair(query_id, query, id, *profile, panel, params);
        if (r.score > 0.0) results.push_back(std::move(r));
    }
    std::sort(results.begin(), results.end(), [](const MatchResult& a, const MatchResult& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.other_id < b.other_id;
    });
    if (results.size() > top_k) results.resize(top_k);
    return results;
}

// ---------------------------------------------------------------------------
// Match report file: `#`-prefixed header with params, one line per match,
// then per-segment lines prefixed `seg`.

inline std::string render_match_report(const std::string& query_id,
                                       const std::vector<MatchResult>& results,
                                       const SnpPanel& panel, const DetectorParams& params) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "# match report\n# query\t%s\n# params\tmin_markers=%u min_cm=%.2f "
                  "max_oh=%u full_min_markers=%u full_min_cm=%.2f\n# panel_cm\t%.2f\n"
                  "# columns\tother_id\ttotal_half_cM\ttotal_full_cM\tS\tdegree\tn_segments\n",
                  query_id.c_str(), params.min_markers, params.min_cm,
                  params.max_opposite_homozygotes_per_window, params.full_min_markers,
                  params.full_min_cm, panel.total_cm());
    out += buf;
    for (const MatchResult& r : results) {
        std::snprintf(buf, sizeof buf, "%s\t%.2f\t%.2f\t%.2f\t%s\t%zu\n", r.other_id.c_str(),
                      r.total_half_cm, r.total_full_cm, r.score, to_string(r.predicted),
                      r.segments.size());
        out += buf;
    }
    for (const MatchResult& r : results)
        for (const IbdSegment& s : r.segments) {
            std::snprintf(buf, sizeof buf, "seg\t%s\t%d\t%s\t%u\t%u\t%.2f\t%.2f\n",
                          r.other_id.c_str(), s.chrom,
                          s.kind == SegmentKind::Half ? "half" : "full", s.start, s.end,
                          s.start_cm, s.end_cm);
            out += buf;
        }
    return out;
}

}  // namespace ibdlab
