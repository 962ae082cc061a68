#pragma once
// Population simulator: marker panels, pedigrees, and phased genotypes with
// Poisson recombination. Every haplotype carries founder-origin labels, so
// the cohort doubles as exact ground truth for IBD detection.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ibdlab/common.hpp"
#include "ibdlab/panel.hpp"
#include "ibdlab/pedigree.hpp"
#include "ibdlab/profile.hpp"
#include "ibdlab/rng.hpp"

namespace ibdlab {

// ---------------------------------------------------------------------------
// Panel generation

inline SnpPanel generate_panel(std::size_t n_markers_per_chrom, double cm_per_chrom,
                               std::uint64_t seed) {
    if (n_markers_per_chrom < 2) throw Error("need at least 2 markers per chromosome");
    if (cm_per_chrom <= 0.0) throw Error("chromosome genetic length must be positive");
    Rng rng(seed);
    std::vector<Marker> markers;
    std::vector<double> freqs;
    markers.reserve(n_markers_per_chrom * kAutosomes);
    freqs.reserve(n_markers_per_chrom * kAutosomes);
    const double spacing = cm_per_chrom / static_cast<double>(n_markers_per_chrom - 1);
    static const char bases[] = {'A', 'C', 'G', 'T'};
    std::size_t serial = 0;
    for (int c = 1; c <= kAutosomes; ++c) {
        for (std::size_t i = 0; i < n_markers_per_chrom; ++i) {
            Marker m;
            m.rsid = "rs" + std::to_string(1000000 + serial++);
            m.chrom = c;
            m.pos = 1 + static_cast<std::int64_t>(i) * 50000;
            m.cm = spacing * static_cast<double>(i);
            m.ref = bases[rng.below(4)];
            do {
                m.alt = bases[rng.below(4)];
            } while (m.alt == m.ref);
            markers.push_back(std::move(m));
            // Bounded away from 0/1 so opposite-homozygote sites stay informative.
            freqs.push_back(rng.uniform(0.1, 0.9));
        }
    }
    return SnpPanel(std::move(markers), std::move(freqs));
}

// ---------------------------------------------------------------------------
// Pedigree generation: founder couples at generation 0; each couple has
// `children_per_couple` children; children who go on to reproduce marry
// spouses drawn as new founders (no inbreeding loops).

struct PedigreeSpec {
    int generations = 4;           // generations of offspring below the founders
    int children_per_couple = 2;
    int founder_couples = 1;
};

inline Pedigree generate_pedigree(const PedigreeSpec& spec, std::uint64_t seed) {
    if (spec.generations < 2 || spec.children_per_couple < 1 || spec.founder_couples < 1)
        throw Error("pedigree spec would produce no usable pedigree");
    Rng rng(seed);
    std::vector<PedigreeMember> members;
    struct Couple { std::uint32_t mother, father; };
    std::vector<Couple> couples;
    auto add = [&](const std::string& id, std::uint32_t mo, std::uint32_t fa, int gen) {
        members.push_back({id, mo, fa, gen});
        return static_cast<std::uint32_t>(members.size() - 1);
    };
    char buf[64];
    for (int k = 0; k < spec.founder_couples; ++k) {
        std::snprintf(buf, sizeof buf, "g0_f%03da", k);
        std::uint32_t a = add(buf, kNoParent, kNoParent, 0);
        std::snprintf(buf, sizeof buf, "g0_f%03db", k);
        std::uint32_t b = add(buf, kNoParent, kNoParent, 0);
        couples.push_back({a, b});
    }
    for (int gen = 1; gen <= spec.generations; ++gen) {
        std::vector<Couple> next;
        int child_serial = 0, spouse_serial = 0;
        for (const Couple& cpl : couples) {
            for (int c = 0; c < spec.children_per_couple; ++c) {
                std::snprintf(buf, sizeof buf, "g%d_c%03d", gen, child_serial++);
                std::uint32_t child = add(buf, cpl.mother, cpl.father, gen);
                if (gen == spec.generations) continue;
                std::snprintf(buf, sizeof buf, "g%d_s%03d", gen, spouse_serial++);
                std::uint32_t spouse = add(buf, kNoParent, kNoParent, gen);
                // Which of the pair is the mother is immaterial; flip a coin
                // so ids do not encode roles.
                if (rng.coin())
                    next.push_back({child, spouse});
                else
                    next.push_back({spouse, child});
            }
        }
        couples = std::move(next);
    }
    return Pedigree(std::move(members));
}

// ---------------------------------------------------------------------------
// Labeled haplotypes

// Half-open runs of founder origin: markers [start, next.start) trace to
// (founder, hap). Runs never span a chromosome boundary.
struct LabelSeg {
    std::uint32_t start;
    std::uint32_t founder;  // pedigree member index
    std::uint8_t hap;       // 0 or 1
};

using HaplotypeLabels = std::vector<LabelSeg>;

struct LabeledDiplotype {
    Diplotype d;
    HaplotypeLabels labels0, labels1;
};

// Per-marker (founder*2 + hap) codes for one haplotype.
inline std::vector<std::uint64_t> expand_labels(const HaplotypeLabels& labels,
                                                std::size_t n_markers) {
    std::vector<std::uint64_t> out(n_markers);
    for (std::size_t s = 0; s < labels.size(); ++s) {
        std::size_t end = (s + 1 < labels.size()) ? labels[s + 1].start : n_markers;
        std::uint64_t code = static_cast<std::uint64_t>(labels[s].founder) * 2 + labels[s].hap;
        for (std::size_t i = labels[s].start; i < end; ++i) out[i] = code;
    }
    return out;
}

struct Gamete {
    std::vector<std::uint8_t> alleles;
    HaplotypeLabels labels;
    unsigned n_crossovers = 0;
};

// One meiosis: per chromosome, crossover count ~ Poisson(length in Morgans),
// positions i.i.d. uniform in genetic coordinates, starting haplotype by fair
// coin; alleles and origin labels are carried from the chosen strand.
inline Gamete meiosis(const LabeledDiplotype& parent, const SnpPanel& panel, Rng& rng) {
    Gamete g;
    g.alleles.resize(panel.size());
    auto copy_run = [&](int strand, std::size_t from, std::size_t to) {
        if (from >= to) return;
        const auto& hap = strand == 0 ? parent.d.hap0 : parent.d.hap1;
        const auto& labels = strand == 0 ? parent.labels0 : parent.labels1;
        std::copy(hap.begin() + static_cast<std::ptrdiff_t>(from),
                  hap.begin() + static_cast<std::ptrdiff_t>(to),
                  g.alleles.begin() + static_cast<std::ptrdiff_t>(from));
        // Splice the source labels covering [from, to).
        std::size_t s = 0;
        while (s + 1 < labels.size() && labels[s + 1].start <= from) ++s;
        g.labels.push_back({static_cast<std::uint32_t>(from), labels[s].founder, labels[s].hap});
        for (++s; s < labels.size() && labels[s].start < to; ++s)
            g.labels.push_back(labels[s]);
    };
    for (int c = 1; c <= kAutosomes; ++c) {
        if (!panel.chrom_present(c)) continue;
        const std::size_t lo = panel.chrom_begin(c), hi = panel.chrom_end(c);
        const double cm0 = panel.marker(lo).cm;
        const double span = panel.chrom_span_cm(c);
        unsigned k = rng.poisson(span / 100.0);
        g.n_crossovers += k;
        std::vector<std::size_t> switches(k);
        for (unsigned i = 0; i < k; ++i)
            switches[i] = panel.lower_bound_cm(c, cm0 + rng.uniform(0.0, span));
        std::sort(switches.begin(), switches.end());
        int strand = rng.coin() ? 1 : 0;
        std::size_t cursor = lo;
        for (std::size_t sw : switches) {
            copy_run(strand, cursor, sw);
            if (sw > cursor) cursor = sw;
            strand ^= 1;
        }
        copy_run(strand, cursor, hi);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Cohort simulation

struct SimCohort {
    PanelPtr panel;
    Pedigree pedigree;
    std::vector<LabeledDiplotype> diplotypes;  // by pedigree member index
    std::vector<double> allele_freqs;

    const LabeledDiplotype& of(std::uint32_t member) const { return diplotypes[member]; }
    GenotypeProfile genotype(std::uint32_t member) const {
        return unphase(diplotypes[member].d);
    }
};

inline LabeledDiplotype draw_founder(const SnpPanel& panel, std::uint32_t member, Rng& rng) {
    LabeledDiplotype ld;
    ld.d.hap0.resize(panel.size());
    ld.d.hap1.resize(panel.size());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        const double f = panel.alt_freq(i);
        ld.d.hap0[i] = rng.next_double() < f;
        ld.d.hap1[i] = rng.next_double() < f;
    }
    for (int c = 1; c <= kAutosomes; ++c) {
        if (!panel.chrom_present(c)) continue;
        auto b = static_cast<std::uint32_t>(panel.chrom_begin(c));
        ld.labels0.push_back({b, member, 0});
        ld.labels1.push_back({b, member, 1});
    }
    return ld;
}

// Founders are drawn i.i.d. from the panel allele frequencies; each
// non-founder is built from one meiosis per parent (hap0 maternal, hap1
// paternal). Randomness comes from per-individual substreams of the master
// seed, so members may be simulated in any order (or in parallel) without
// changing the result.
inline SimCohort simulate_genotypes(const Pedigree& pedigree, PanelPtr panel,
                                    std::uint64_t seed) {
    SimCohort cohort;
    cohort.panel = panel;
    cohort.pedigree = pedigree;
    cohort.allele_freqs.resize(panel->size());
    for (std::size_t i = 0; i < panel->size(); ++i)
        cohort.allele_freqs[i] = panel->alt_freq(i);
    cohort.diplotypes.resize(pedigree.size());

    std::vector<std::uint32_t> order(pedigree.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return pedigree.member(a).generation < pedigree.member(b).generation;
    });
    for (std::uint32_t idx : order) {
        const PedigreeMember& m = pedigree.member(idx);
        Rng rng = Rng::substream(seed, m.id);
        if (m.is_founder()) {
            cohort.diplotypes[idx] = draw_founder(*panel, idx, rng);
        } else {
            Gamete maternal = meiosis(cohort.diplotypes[m.mother], *panel, rng);
            Gamete paternal = meiosis(cohort.diplotypes[m.father], *panel, rng);
            LabeledDiplotype ld;
            ld.d.hap0 = std::move(maternal.alleles);
            ld.d.hap1 = std::move(paternal.alleles);
            ld.labels0 = std::move(maternal.labels);
            ld.labels1 = std::move(paternal.labels);
            cohort.diplotypes[idx] = ld;
        }
        cohort.diplotypes[idx].d.panel = panel;
    }
    return cohort;
}

// Each call is independently replaced with probability `rate` by a uniform
// draw from the other two non-Missing states; Missing calls stay Missing.
inline GenotypeProfile inject_genotyping_error(const GenotypeProfile& profile, double rate,
                                               std::uint64_t seed) {
    if (rate < 0.0 || rate > 1.0) throw Error("error rate must be in [0, 1]");
    GenotypeProfile out = profile;
    Rng rng(seed);
    for (std::size_t i = 0; i < out.size(); ++i) {
        GenotypeCall c = out.call(i);
        if (c == GenotypeCall::Missing) continue;
        if (rng.next_double() >= rate) continue;
        unsigned cur = static_cast<unsigned>(c);
        unsigned repl = (cur + 1 + rng.below(2)) % 3;
        out.calls.set(i, static_cast<GenotypeCall>(repl));
    }
    return out;
}

// Unrelated synthetic individual drawn from panel frequencies (Hardy-Weinberg).
inline GenotypeProfile random_profile(PanelPtr panel, Rng& rng) {
    GenotypeProfile g(panel);
    for (std::size_t i = 0; i < panel->size(); ++i) {
        const double f = panel->alt_freq(i);
        unsigned dosage = (rng.next_double() < f) + (rng.next_double() < f);
        g.calls.set(i, static_cast<GenotypeCall>(dosage));
    }
    return g;
}

// ---------------------------------------------------------------------------
// Cohort identities and export. These are the "true" identities the vault's
// verification oracle knows about.

constexpr std::int64_t kCohortEpoch = 1577836800;  // 2020-01-01T00:00:00Z

inline ProfileMetadata cohort_identity(const Pedigree& pedigree, std::uint32_t member,
                                       const std::string& lab_id = "sim-lab",
                                       const std::string& instrument_id = "array-01") {
    const std::string& id = pedigree.member(member).id;
    ProfileMetadata meta;
    meta.profile_id = id;
    meta.account_id = "acct-" + id;
    meta.claimed_name = "Person " + id;
    meta.claimed_email = id + "@cohort.example";
    meta.source_lab_id = lab_id;
    meta.instrument_id = instrument_id;
    meta.generated_at = kCohortEpoch + static_cast<std::int64_t>(member);
    return meta;
}

// labels.tsv: individual<TAB>hap<TAB>chrom<TAB>start_idx<TAB>end_idx<TAB>
//             founder_id<TAB>founder_hap  (end exclusive)
inline std::string render_labels(const SimCohort& cohort) {
    std::string out;
    const SnpPanel& panel = *cohort.panel;
    auto emit = [&](const std::string& id, int hap, const HaplotypeLabels& labels) {
        for (std::size_t s = 0; s < labels.size(); ++s) {
            std::size_t start = labels[s].start;
            int chrom = panel.marker(start).chrom;
            std::size_t end = (s + 1 < labels.size())
                                  ? labels[s + 1].start
                                  : panel.size();
            if (end > panel.chrom_end(chrom)) end = panel.chrom_end(chrom);
            out += id;
            out += '\t';
            out += std::to_string(hap);
            out += '\t';
            out += std::to_string(chrom);
            out += '\t';
            out += std::to_string(start);
            out += '\t';
            out += std::to_string(end);
            out += '\t';
            out += cohort.pedigree.member(labels[s].founder).id;
            out += '\t';
            out += std::to_string(labels[s].hap);
            out += '\n';
        }
    };
    for (std::uint32_t i = 0; i < cohort.pedigree.size(); ++i) {
        const std::string& id = cohort.pedigree.member(i).id;
        emit(id, 0, cohort.diplotypes[i].labels0);
        emit(id, 1, cohort.diplotypes[i].labels1);
    }
    return out;
}

// Writes panel.tsv, freqs.tsv, pedigree.tsv, labels.tsv and one canonical
// profile per member under profiles/.
inline void export_cohort(const SimCohort& cohort, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "profiles");
    write_text_file((dir / "panel.tsv").string(), cohort.panel->definition_text());
    write_text_file((dir / "freqs.tsv").string(), render_freqs(*cohort.panel));
    write_text_file((dir / "pedigree.tsv").string(), cohort.pedigree.render());
    write_text_file((dir / "labels.tsv").string(), render_labels(cohort));
    for (std::uint32_t i = 0; i < cohort.pedigree.size(); ++i) {
        const std::string& id = cohort.pedigree.member(i).id;
        Bytes bytes = serialize_canonical(cohort.genotype(i),
                                          cohort_identity(cohort.pedigree, i));
        write_text_file((dir / "profiles" / (id + ".cp")).string(),
                        std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                         bytes.size()));
    }
}

}  // namespace ibdlab
