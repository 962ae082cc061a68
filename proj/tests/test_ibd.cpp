#include <catch2/catch_amalgamated.hpp>

#include "ibdlab/ibd.hpp"
#include "test_util.hpp"

using namespace ibdlab;
using testutil::small_panel;

namespace {

// 101 markers on chromosome 1 at integer centimorgans; makes segment
// arithmetic exact in tests.
PanelPtr ruler_panel() {
    std::vector<Marker> markers;
    for (int i = 0; i <= 100; ++i)
        markers.push_back({"rs" + std::to_string(i), 1, 1000 + i * 1000,
                           static_cast<double>(i), 'A', 'G'});
    return std::make_shared<SnpPanel>(std::move(markers));
}

DetectorParams unfiltered() {
    DetectorParams p;
    p.min_markers = 1;
    p.min_cm = 0.0;
    p.full_min_markers = 1;
    p.full_min_cm = 0.0;
    return p;
}

DetectorParams scaled_params(const SnpPanel& panel, double min_cm = 12.0) {
    DetectorParams p;
    const double markers_per_cm = static_cast<double>(panel.size()) / panel.total_cm();
    p.min_markers = static_cast<std::uint32_t>(min_cm * markers_per_cm * 0.8);
    p.min_cm = min_cm;
    p.full_min_markers = p.min_markers;
    p.full_min_cm = min_cm;
    return p;
}

double coverage_of(const std::vector<IbdSegment>& segs, SegmentKind kind) {
    double total = 0.0;
    for (const auto& s : segs)
        if (s.kind == kind) total += s.length_cm();
    return total;
}

bool contained(const IbdSegment& inner, const std::vector<IbdSegment>& outer) {
    for (const auto& o : outer) {
        if (o.chrom != inner.chrom) continue;
        const bool kind_ok = o.kind == inner.kind || o.kind == SegmentKind::Full;
        if (kind_ok && o.start <= inner.start && o.end >= inner.end) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("true_ibd_segments: identity, parent-child, founders") {
    auto panel = small_panel(19, 60, 100.0);
    Pedigree ped = generate_pedigree({2, 2, 1}, 19);
    SimCohort cohort = simulate_genotypes(ped, panel, 19);
    DetectorParams zero = unfiltered();

    std::uint32_t founder_a = ped.find("g0_f000a");
    std::uint32_t founder_b = ped.find("g0_f000b");
    std::uint32_t child = Pedigree::npos;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (ped.member(i).mother == founder_a || ped.member(i).father == founder_a) child = i;
    REQUIRE(child != Pedigree::npos);

    // Self: one Full segment spanning each chromosome.
    auto self = true_ibd_segments(cohort.of(founder_a), cohort.of(founder_a), *panel, zero);
    REQUIRE(self.size() == kAutosomes);
    for (const auto& s : self) {
        CHECK(s.kind == SegmentKind::Full);
        CHECK(s.start == panel->chrom_begin(s.chrom));
        CHECK(s.end == panel->chrom_end(s.chrom) - 1);
    }

    // Parent vs child: Half covers 100% of every chromosome; zero Full.
    auto pc = true_ibd_segments(cohort.of(founder_a), cohort.of(child), *panel, zero);
    CHECK(coverage_of(pc, SegmentKind::Full) == 0.0);
    CHECK_THAT(coverage_of(pc, SegmentKind::Half),
               Catch::Matchers::WithinAbs(panel->total_cm(), 1e-9));

    // Distinct founders share nothing.
    CHECK(true_ibd_segments(cohort.of(founder_a), cohort.of(founder_b), *panel, zero).empty());
}

TEST_CASE("detect_ibd: self-match yields chromosome-spanning Full segments") {
    auto panel = small_panel(23, 400, 160.0);
    Rng rng(23);
    GenotypeProfile g = testutil::sample_profile(panel, rng);
    auto segs = detect_ibd(g, g, *panel, scaled_params(*panel));
    REQUIRE(segs.size() == kAutosomes);
    for (const auto& s : segs) {
        CHECK(s.kind == SegmentKind::Full);
        CHECK(s.start == panel->chrom_begin(s.chrom));
        CHECK(s.end == panel->chrom_end(s.chrom) - 1);
    }
    MatchTotals t = summarize_match(segs, *panel);
    CHECK_THAT(t.half_cm, Catch::Matchers::WithinAbs(0.0, 1e-9));
    CHECK_THAT(t.full_cm, Catch::Matchers::WithinAbs(panel->total_cm(), 1e-9));
    CHECK_THAT(t.score, Catch::Matchers::WithinAbs(2.0 * panel->total_cm(), 1e-9));
    CHECK(classify_relationship(t.half_cm, t.full_cm, panel->total_cm()) ==
          RelationshipDegree::Identical);
}

TEST_CASE("detect_ibd: opposite homozygotes everywhere yield nothing") {
    auto panel = ruler_panel();
    GenotypeProfile a(panel), b(panel);
    for (std::size_t i = 0; i < panel->size(); ++i) {
        a.calls.set(i, GenotypeCall::HomRef);
        b.calls.set(i, GenotypeCall::HomAlt);
    }
    CHECK(detect_ibd(a, b, *panel, unfiltered()).empty());
}

TEST_CASE("detect_ibd: parent-child half coverage is near-complete and contains the oracle") {
    auto panel = small_panel(29, 400, 160.0);
    Pedigree ped = generate_pedigree({2, 2, 1}, 29);
    SimCohort cohort = simulate_genotypes(ped, panel, 29);
    std::uint32_t parent = ped.find("g0_f000a");
    std::uint32_t child = Pedigree::npos;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (ped.member(i).mother == parent || ped.member(i).father == parent) child = i;

    auto detected = detect_ibd(cohort.genotype(parent), cohort.genotype(child), *panel,
                               scaled_params(*panel));
    const double half = coverage_of(detected, SegmentKind::Half) +
                        coverage_of(detected, SegmentKind::Full);
    CHECK(half >= 0.99 * panel->total_cm());
}

TEST_CASE("detect_ibd treats Missing as transparent and trims to called boundaries") {
    auto panel = ruler_panel();
    GenotypeProfile a(panel), b(panel);
    for (std::size_t i = 0; i < panel->size(); ++i) {
        a.calls.set(i, GenotypeCall::HomRef);
        b.calls.set(i, GenotypeCall::HomRef);
    }
    // Missing in the middle must not break the run.
    a.calls.set(50, GenotypeCall::Missing);
    b.calls.set(51, GenotypeCall::Missing);
    // Uncalled tails must be trimmed off.
    a.calls.set(0, GenotypeCall::Missing);
    b.calls.set(100, GenotypeCall::Missing);
    DetectorParams p = unfiltered();
    p.min_markers = 10;
    p.min_cm = 5.0;
    p.full_min_markers = 10;
    p.full_min_cm = 5.0;
    auto segs = detect_ibd(a, b, *panel, p);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].kind == SegmentKind::Full);  // identical calls, coincident with its run
    CHECK(segs[0].start == 1);
    CHECK(segs[0].end == 99);
}

TEST_CASE("detect_ibd splits runs at opposite homozygotes") {
    auto panel = ruler_panel();
    GenotypeProfile a(panel), b(panel);
    for (std::size_t i = 0; i < panel->size(); ++i) {
        a.calls.set(i, GenotypeCall::Het);
        b.calls.set(i, GenotypeCall::Het);
    }
    a.calls.set(40, GenotypeCall::HomRef);
    b.calls.set(40, GenotypeCall::HomAlt);
    DetectorParams p = unfiltered();
    p.min_markers = 5;
    p.min_cm = 2.0;
    auto segs = detect_ibd(a, b, *panel, p);
    // Identical het calls: two Full segments flanking the OH site.
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].end == 39);
    CHECK(segs[1].start == 41);

    // With the tolerance knob the half run spans the OH site; the genotype
    // mismatch there still splits the Full sub-runs.
    p.max_opposite_homozygotes_per_window = 1;
    auto merged = detect_ibd(a, b, *panel, p);
    std::vector<IbdSegment> halves;
    for (const auto& s : merged)
        if (s.kind == SegmentKind::Half) halves.push_back(s);
    REQUIRE(halves.size() == 1);
    CHECK(halves[0].start == 0);
    CHECK(halves[0].end == 100);
}

TEST_CASE("oracle containment: true segments lie inside detected segments") {
    auto panel = small_panel(37, 400, 160.0);
    Pedigree ped = generate_pedigree({4, 2, 1}, 37);
    SimCohort cohort = simulate_genotypes(ped, panel, 37);
    DetectorParams params = scaled_params(*panel);
    Rng rng(370);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        auto i = static_cast<std::uint32_t>(rng.below(ped.size()));
        auto j = static_cast<std::uint32_t>(rng.below(ped.size()));
        if (i == j) continue;
        auto truth = true_ibd_segments(cohort.of(i), cohort.of(j), *panel, params);
        if (truth.empty()) continue;
        auto detected = detect_ibd(cohort.genotype(i), cohort.genotype(j), *panel, params);
        for (const auto& t : truth) {
            INFO("pair " << ped.member(i).id << " x " << ped.member(j).id);
            REQUIRE(contained(t, detected));
            ++checked;
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("detect_ibd is symmetric in its arguments") {
    auto panel = small_panel(41, 120, 120.0);
    Rng rng(41);
    for (int trial = 0; trial < 8; ++trial) {
        GenotypeProfile a = testutil::sample_profile(panel, rng, 0.02);
        GenotypeProfile b = testutil::sample_profile(panel, rng, 0.02);
        auto ab = detect_ibd(a, b, *panel, unfiltered());
        auto ba = detect_ibd(b, a, *panel, unfiltered());
        REQUIRE(ab.size() == ba.size());
        for (std::size_t k = 0; k < ab.size(); ++k) {
            CHECK(ab[k].start == ba[k].start);
            CHECK(ab[k].end == ba[k].end);
            CHECK(ab[k].kind == ba[k].kind);
        }
    }
}

TEST_CASE("raising detection thresholds never adds segments") {
    auto panel = small_panel(43, 300, 160.0);
    Pedigree ped = generate_pedigree({3, 2, 1}, 43);
    SimCohort cohort = simulate_genotypes(ped, panel, 43);
    DetectorParams loose = scaled_params(*panel, 8.0);
    DetectorParams strict = loose;
    strict.min_cm = 16.0;
    strict.min_markers = loose.min_markers * 2;
    Rng rng(430);
    for (int trial = 0; trial < 12; ++trial) {
        auto i = static_cast<std::uint32_t>(rng.below(ped.size()));
        auto j = static_cast<std::uint32_t>(rng.below(ped.size()));
        auto a = cohort.genotype(i);
        auto b = cohort.genotype(j);
        auto loose_segs = detect_ibd(a, b, *panel, loose);
        auto strict_segs = detect_ibd(a, b, *panel, strict);
        CHECK(strict_segs.size() <= loose_segs.size());
        for (const auto& s : strict_segs) {
            bool found = false;
            for (const auto& l : loose_segs)
                if (l.chrom == s.chrom && l.start == s.start && l.end == s.end &&
                    l.kind == s.kind)
                    found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("summarize_match totals and S") {
    auto panel = ruler_panel();
    CHECK(summarize_match({}, *panel).score == 0.0);

    IbdSegment half{1, 10, 35, 10.0, 35.0, SegmentKind::Half};
    MatchTotals one = summarize_match({half}, *panel);
    CHECK_THAT(one.half_cm, Catch::Matchers::WithinAbs(25.0, 1e-12));
    CHECK_THAT(one.score, Catch::Matchers::WithinAbs(25.0, 1e-12));

    IbdSegment full{1, 15, 25, 15.0, 25.0, SegmentKind::Full};
    MatchTotals nested = summarize_match({half, full}, *panel);
    CHECK_THAT(nested.full_cm, Catch::Matchers::WithinAbs(10.0, 1e-12));
    CHECK_THAT(nested.score, Catch::Matchers::WithinAbs(45.0, 1e-12));

    IbdSegment overlap{1, 30, 60, 30.0, 60.0, SegmentKind::Half};
    CHECK_THROWS_AS(summarize_match({half, overlap}, *panel), Error);
}

TEST_CASE("classify_relationship implements the (h, phi) branches and the ladder") {
    const double L = 3520.0;
    using RD = RelationshipDegree;
    CHECK(classify_relationship(L, 0.0, L) == RD::ParentChild);
    CHECK(classify_relationship(0.98 * L, 0.05 * L, L) == RD::ParentChild);
    CHECK(classify_relationship(0.50 * L, 0.25 * L, L) == RD::FullSibling);
    CHECK(classify_relationship(0.77 * L, 0.25 * L, L) == RD::FullSibling);
    CHECK(classify_relationship(0.0, L, L) == RD::Identical);
    CHECK(classify_relationship(0.0, 0.96 * L, L) == RD::Identical);

    // Ladder centers: half fraction 2*f_k with no full-IBD lands on Degree k.
    const RD ladder[] = {RD::Degree2, RD::Degree3, RD::Degree4,
                         RD::Degree5, RD::Degree6, RD::Degree7};
    for (int k = 2; k <= 7; ++k) {
        const double h = 2.0 * std::pow(2.0, -k);
        CHECK(classify_relationship(h * L, 0.0, L) == ladder[k - 2]);
    }
    // True-2nd-cousin scale sharing classifies as Degree5.
    CHECK(classify_relationship(0.0625 * L, 0.0, L) == RD::Degree5);
    // Geometric midpoint edges around Degree5 (f_5 = 0.03125).
    const double root2 = std::sqrt(2.0);
    CHECK(classify_relationship(2 * 0.03125 / root2 * 1.001 * L, 0.0, L) == RD::Degree5);
    CHECK(classify_relationship(2 * 0.03125 / root2 * 0.999 * L, 0.0, L) == RD::Degree6);
    CHECK(classify_relationship(2 * 0.03125 * root2 * 1.001 * L, 0.0, L) == RD::Degree4);
    // Below the Degree7 band: distant or unrelated.
    CHECK(classify_relationship(0.01 * L, 0.0, L) == RD::DistantOrUnrelated);
    CHECK(classify_relationship(0.0, 0.0, L) == RD::DistantOrUnrelated);

    CHECK_THROWS_AS(classify_relationship(1.1 * L, 0.0, L), Error);
    CHECK_THROWS_AS(classify_relationship(-1.0, 0.0, L), Error);
}

TEST_CASE("classify_relationship is monotone in sharing outside the sibling band") {
    const double L = 3520.0;
    int prev = static_cast<int>(RelationshipDegree::DistantOrUnrelated);
    for (double h = 0.0; h <= 1.0; h += 0.001) {
        int cur = static_cast<int>(classify_relationship(h * L, 0.0, L));
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("query_all ranks by score with id tie-break and honors top_k") {
    auto panel = small_panel(47, 200, 160.0);
    Pedigree ped = generate_pedigree({3, 2, 1}, 47);
    SimCohort cohort = simulate_genotypes(ped, panel, 47);
    DetectorParams params = scaled_params(*panel);

    std::uint32_t suspect = Pedigree::npos;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (ped.member(i).generation == 3) { suspect = i; break; }
    REQUIRE(suspect != Pedigree::npos);
    GenotypeProfile q = cohort.genotype(suspect);

    std::vector<std::pair<std::string, GenotypeProfile>> storage;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        storage.emplace_back(ped.member(i).id, cohort.genotype(i));
    std::vector<std::pair<std::string, const GenotypeProfile*>> cohort_view;
    for (auto& [id, p] : storage) cohort_view.emplace_back(id, &p);

    auto results = query_all("q", q, cohort_view, *panel, params, 100);
    REQUIRE(!results.empty());
    CHECK(results[0].other_id == ped.member(suspect).id);
    CHECK(results[0].predicted == RelationshipDegree::Identical);
    for (std::size_t k = 1; k < results.size(); ++k) {
        CHECK(results[k].score > 0.0);
        CHECK(results[k - 1].score >= results[k].score);
    }
    CHECK(query_all("q", q, cohort_view, *panel, params, 0).empty());

    // Identical stored copies tie on S and order by id.
    std::vector<std::pair<std::string, const GenotypeProfile*>> dup{
        {"bbb", &storage[suspect].second}, {"aaa", &storage[suspect].second}};
    auto tied = query_all("q", q, dup, *panel, params, 10);
    REQUIRE(tied.size() == 2);
    CHECK(tied[0].other_id == "aaa");
    CHECK(tied[1].other_id == "bbb");
}

TEST_CASE("query against an all-founder cohort is empty or far sub-threshold") {
    // Spec-default thresholds need the desk-scale marker density
    // (~12.5 markers/cM); chance zero-OH runs are killed by the 200-marker
    // minimum, not the centimorgan one.
    auto panel = small_panel(53, 300, 24.0);
    Pedigree ped = generate_pedigree({2, 1, 30}, 53);
    SimCohort cohort = simulate_genotypes(ped, panel, 53);
    DetectorParams params;  // defaults: 200 markers, 12 cM
    auto founders = ped.founders();
    GenotypeProfile q = cohort.genotype(founders[0]);
    std::vector<std::pair<std::string, GenotypeProfile>> storage;
    for (std::size_t k = 1; k < founders.size(); ++k)
        storage.emplace_back(ped.member(founders[k]).id, cohort.genotype(founders[k]));
    std::vector<std::pair<std::string, const GenotypeProfile*>> view;
    for (auto& [id, p] : storage) view.emplace_back(id, &p);
    auto results = query_all("q", q, view, *panel, params, 100);
    // The oracle confirms zero true sharing; anything here is detector noise.
    for (const auto& r : results) {
        auto truth = true_ibd_segments(cohort.of(founders[0]),
                                       cohort.of(ped.find(r.other_id)), *panel, params);
        CHECK(truth.empty());
    }
    CHECK(results.size() <= 2);
}

TEST_CASE("match report renders params, match lines and segment lines") {
    auto panel = small_panel(59, 100, 120.0);
    Rng rng(59);
    GenotypeProfile g = testutil::sample_profile(panel, rng);
    std::vector<std::pair<std::string, const GenotypeProfile*>> view{{"self", &g}};
    auto results = query_all("me", g, view, *panel, scaled_params(*panel), 5);
    std::string report = render_match_report("me", results, *panel, scaled_params(*panel));
    CHECK(report.find("# query\tme") != std::string::npos);
    CHECK(report.find("self\t") != std::string::npos);
    CHECK(report.find("Identical") != std::string::npos);
    CHECK(report.find("seg\tself\t") != std::string::npos);
}
