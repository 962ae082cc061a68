#pragma once
// Synthetic-relative construction: plan segment regions sized for a target
// relationship, phase target and base naively, splice one target phase into
// one base phase, unphase. Plus metadata spoofing and flood generation.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ibdlab/common.hpp"
#include "ibdlab/ibd.hpp"
#include "ibdlab/panel.hpp"
#include "ibdlab/popsim.hpp"
#include "ibdlab/profile.hpp"
#include "ibdlab/rng.hpp"

namespace ibdlab {

struct PlanRegion {
    int chrom = 0;
    double start_cm = 0.0;
    double end_cm = 0.0;
    double length_cm() const { return end_cm - start_cm; }
};

struct SegmentPlan {
    std::vector<PlanRegion> regions;
    RelationshipDegree intended = RelationshipDegree::Degree5;

    double total_cm() const {
        double t = 0.0;
        for (const auto& r : regions) t += r.length_cm();
        return t;
    }
};

inline void validate_plan(const SegmentPlan& plan, const SnpPanel& panel, double min_cm) {
    std::vector<PlanRegion> sorted = plan.regions;
    std::sort(sorted.begin(), sorted.end(), [](const PlanRegion& a, const PlanRegion& b) {
        return std::tie(a.chrom, a.start_cm) < std::tie(b.chrom, b.start_cm);
    });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const PlanRegion& r = sorted[i];
        if (r.chrom < 1 || r.chrom > kAutosomes || !panel.chrom_present(r.chrom))
            throw Error("plan region on absent chromosome");
        const double lo = panel.marker(panel.chrom_begin(r.chrom)).cm;
        const double hi = panel.marker(panel.chrom_end(r.chrom) - 1).cm;
        if (r.start_cm < lo - 1e-9 || r.end_cm > hi + 1e-9 || r.end_cm <= r.start_cm)
            throw Error("plan region outside chromosome bounds");
        if (r.length_cm() < min_cm - 1e-9)
            throw Error("plan region shorter than detector minimum");
        if (i > 0 && sorted[i - 1].chrom == r.chrom &&
            r.start_cm < sorted[i - 1].end_cm - 1e-9)
            throw Error("plan regions overlap");
    }
}

// Meioses separating relatives of genealogical rank k, assuming the usual
// shared-ancestor-couple path (2nd cousins: rank 5, 6 meioses).
inline int meioses_for_degree(RelationshipDegree degree) {
    return degree_rank(degree) + 1;
}

// Sampled plan: segment lengths exponential with mean 100/m cM truncated
// below at min_cm, placed uniformly without overlap until the total reaches
// (expected sharing fraction * panel length) within +/-10%.
inline SegmentPlan plan_segments(RelationshipDegree degree, const SnpPanel& panel, Rng& rng,
                                 double min_cm = 12.0) {
    const int rank = degree_rank(degree);
    if (rank < 2 || rank > 7)
        throw Error("sampled plans support Degree2..Degree7; closer relatives need an "
                    "explicit plan");
    const double target = expected_sharing_fraction(rank) * panel.total_cm();
    if (target <= min_cm)
        throw Error("cannot place segments: panel too small for requested degree");
    const double mean_len = 100.0 / static_cast<double>(meioses_for_degree(degree));
    double longest_chrom = 0.0;
    for (int c = 1; c <= kAutosomes; ++c)
        longest_chrom = std::max(longest_chrom, panel.chrom_span_cm(c));
    if (longest_chrom < min_cm)
        throw Error("cannot place segments: no chromosome is as long as min_cm");

    std::vector<double> pieces;
    double total = 0.0;
    while (total < 0.9 * target) {
        const double remaining = target - total;
        if (remaining <= min_cm) {
            // Too small to stand alone; fold it into a piece that still fits
            // on some chromosome.
            bool absorbed = false;
            for (double& p : pieces)
                if (p + remaining <= longest_chrom) {
                    p += remaining;
                    absorbed = true;
                    break;
                }
            if (!absorbed) throw Error("cannot place segments: panel too small");
            total = target;
            break;
        }
        // Shifting an exponential by its truncation point reproduces the
        // truncated distribution exactly. A draw longer than every
        // chromosome could never place, so cap it there.
        double len = min_cm + rng.exponential(mean_len);
        if (len > remaining) len = remaining;
        if (len > longest_chrom) len = longest_chrom;
        pieces.push_back(len);
        total += len;
    }
    std::sort(pieces.begin(), pieces.end(), std::greater<double>());

    // Uniform placement over the genome, rejecting overlaps.
    std::vector<double> chrom_lo(kAutosomes + 1), chrom_hi(kAutosomes + 1);
    double genome = 0.0;
    for (int c = 1; c <= kAutosomes; ++c) {
        if (!panel.chrom_present(c)) continue;
        chrom_lo[c] = panel.marker(panel.chrom_begin(c)).cm;
        chrom_hi[c] = panel.marker(panel.chrom_end(c) - 1).cm;
        genome += chrom_hi[c] - chrom_lo[c];
    }
    SegmentPlan plan;
    plan.intended = degree;
    for (double len : pieces) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            double x = rng.uniform(0.0, genome);
            int chrom = 0;
            for (int c = 1; c <= kAutosomes; ++c) {
                if (!panel.chrom_present(c)) continue;
                const double span = chrom_hi[c] - chrom_lo[c];
                if (x < span) { chrom = c; break; }
                x -= span;
            }
            if (chrom == 0 || chrom_hi[chrom] - chrom_lo[chrom] < len) continue;
            const double start = rng.uniform(chrom_lo[chrom], chrom_hi[chrom] - len);
            PlanRegion region{chrom, start, start + len};
            bool overlaps = false;
            for (const auto& r : plan.regions)
                if (r.chrom == chrom && start < r.end_cm && region.end_cm > r.start_cm) {
                    overlaps = true;
                    break;
                }
            if (!overlaps) {
                plan.regions.push_back(region);
                placed = true;
            }
        }
        if (!placed) throw Error("cannot place segments: panel too small");
    }
    std::sort(plan.regions.begin(), plan.regions.end(),
              [](const PlanRegion& a, const PlanRegion& b) {
                  return std::tie(a.chrom, a.start_cm) < std::tie(b.chrom, b.start_cm);
              });
    validate_plan(plan, panel, min_cm);
    return plan;
}

// Explicit mode: regions copied from a real relative match pass through
// after validation.
inline SegmentPlan plan_from_regions(std::vector<PlanRegion> regions,
                                     RelationshipDegree intended, const SnpPanel& panel,
                                     double min_cm = 12.0) {
    SegmentPlan plan;
    plan.regions = std::move(regions);
    plan.intended = intended;
    validate_plan(plan, panel, min_cm);
    return plan;
}

// ---------------------------------------------------------------------------
// Naive phasing: homozygous sites are forced; heterozygous sites assign
// ref/alt to hap0/hap1 by fair coin; Missing sites are filled with a
// frequency-weighted random allele pair and flagged.

struct PhasedProfile {
    Diplotype d;
    std::vector<std::uint32_t> filled;  // marker indices invented at Missing sites
};

inline PhasedProfile naive_phase(const GenotypeProfile& g, Rng& rng) {
    PhasedProfile out;
    out.d.panel = g.panel;
    out.d.hap0.resize(g.size());
    out.d.hap1.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        switch (g.call(i)) {
            case GenotypeCall::HomRef:
                out.d.hap0[i] = out.d.hap1[i] = 0;
                break;
            case GenotypeCall::HomAlt:
                out.d.hap0[i] = out.d.hap1[i] = 1;
                break;
            case GenotypeCall::Het: {
                const bool alt_first = rng.coin();
                out.d.hap0[i] = alt_first ? 1 : 0;
                out.d.hap1[i] = alt_first ? 0 : 1;
                break;
            }
            default: {
                const double f = g.panel->alt_freq(i);
                out.d.hap0[i] = rng.next_double() < f;
                out.d.hap1[i] = rng.next_double() < f;
                out.filled.push_back(static_cast<std::uint32_t>(i));
                break;
            }
        }
    }
    return out;
}

struct ForgedProfile {
    GenotypeProfile genotype;
    SegmentPlan plan;
    std::string target_id;
    std::string base_id;
    ProfileMetadata spoofed;
    std::vector<std::uint32_t> filled_sites;  // invented calls, kept for audit of the tool
};

// Splice hap0 of the (naively phased) target into hap0 of the base over every
// plan region, then unphase. Inside plan regions the forgery carries one
// target allele at every marker, so it can never be opposite-homozygous with
// the target there, regardless of phasing randomness.
inline ForgedProfile splice(const GenotypeProfile& target, const GenotypeProfile& base,
                            const SegmentPlan& plan, Rng& rng,
                            const std::string& target_id = {},
                            const std::string& base_id = {}) {
    if (!target.panel->same_panel(*base.panel))
        throw Error("target and base are on different panels");
    const SnpPanel& panel = *target.panel;
    validate_plan(plan, panel, 0.0);

    PhasedProfile pt = naive_phase(target, rng);
    PhasedProfile pb = naive_phase(base, rng);
    ForgedProfile out;
    out.plan = plan;
    out.target_id = target_id;
    out.base_id = base_id;
    out.filled_sites = pb.filled;
    for (const PlanRegion& r : plan.regions) {
        const std::size_t lo = panel.lower_bound_cm(r.chrom, r.start_cm);
        std::size_t hi = panel.lower_bound_cm(r.chrom, r.end_cm);
        if (hi < panel.chrom_end(r.chrom) && panel.marker(hi).cm <= r.end_cm) ++hi;
        for (std::size_t m = lo; m < hi; ++m) pb.d.hap0[m] = pt.d.hap0[m];
        for (std::uint32_t f : pt.filled)
            if (f >= lo && f < hi) out.filled_sites.push_back(f);
    }
    std::sort(out.filled_sites.begin(), out.filled_sites.end());
    out.filled_sites.erase(std::unique(out.filled_sites.begin(), out.filled_sites.end()),
                           out.filled_sites.end());
    out.genotype = unphase(pb.d, rng.next_u64());
    return out;
}

// Metadata spoofing touches no genotype call: attacker-chosen identity fields
// plus a fresh profile id.
inline ProfileMetadata spoof_metadata(const std::string& fake_name,
                                      const std::string& fake_email,
                                      const std::string& fake_lab,
                                      const std::string& fake_instrument,
                                      std::int64_t generated_at,
                                      const std::string& account_id, Rng& rng) {
    ProfileMetadata meta;
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(rng.next_u64()));
    meta.profile_id = std::string("p-") + buf;
    meta.account_id = account_id;
    meta.claimed_name = fake_name;
    meta.claimed_email = fake_email;
    meta.source_lab_id = fake_lab;
    meta.instrument_id = fake_instrument;
    meta.generated_at = generated_at;
    return meta;
}

// n forged relatives of `target`, each from an independent random base and
// independent sampled plan, each under a distinct fabricated account identity.
inline std::vector<ForgedProfile> generate_flood(const GenotypeProfile& target,
                                                 std::size_t n, RelationshipDegree degree,
                                                 PanelPtr panel, std::uint64_t seed,
                                                 double min_cm = 12.0,
                                                 const std::string& target_id = {}) {
    if (n < 1) throw Error("flood size must be >= 1");
    std::vector<ForgedProfile> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::substream(seed, i);
        GenotypeProfile base = random_profile(panel, rng);
        SegmentPlan plan = plan_segments(degree, *panel, rng, min_cm);
        char base_id[40];
        std::snprintf(base_id, sizeof base_id, "flood-base-%03zu", i);
        ForgedProfile f = splice(target, base, plan, rng, target_id, base_id);
        char idx[24];
        std::snprintf(idx, sizeof idx, "%03zu", i);
        f.spoofed = spoof_metadata("Flood Persona " + std::string(idx),
                                   "persona" + std::string(idx) + "@flood.example",
                                   "unknown-lab", "unknown-instrument",
                                   kCohortEpoch + static_cast<std::int64_t>(i),
                                   "flood-acct-" + std::string(idx), rng);
        out.push_back(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plan files: `# degree\t<name>` header, then chrom<TAB>start_cM<TAB>end_cM.

inline std::string render_plan(const SegmentPlan& plan) {
    std::string out = "# degree\t";
    out += to_string(plan.intended);
    out += '\n';
    char buf[96];
    for (const PlanRegion& r : plan.regions) {
        std::snprintf(buf, sizeof buf, "%d\t%.4f\t%.4f\n", r.chrom, r.start_cm, r.end_cm);
        out += buf;
    }
    return out;
}

inline SegmentPlan parse_plan(std::string_view text, const SnpPanel& panel,
                              double min_cm = 12.0) {
    SegmentPlan plan;
    bool saw_degree = false;
    std::size_t line_no = 0, start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : nl - start);
        start = (nl == std::string_view::npos) ? text.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto f = split_fields(line);
            if (f.size() == 2 && f[0] == "# degree") {
                plan.intended = degree_from_string(f[1]);
                saw_degree = true;
            }
            continue;
        }
        auto f = split_fields(line);
        if (f.size() != 3) throw ParseError("plan line needs 3 fields", line_no);
        plan.regions.push_back({static_cast<int>(parse_int(f[0], line_no)),
                                parse_real(f[1], line_no), parse_real(f[2], line_no)});
    }
    if (!saw_degree) throw ParseError("plan file missing degree header");
    validate_plan(plan, panel, min_cm);
    return plan;
}

}  // namespace ibdlab
