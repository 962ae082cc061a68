#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <map>

#include "ibdlab/popsim.hpp"
#include "test_util.hpp"

using namespace ibdlab;
using testutil::small_panel;

TEST_CASE("generate_panel produces the desk-scale panel") {
    SnpPanel panel = generate_panel(2000, 160.0, 42);
    CHECK(panel.size() == 44000);
    CHECK_THAT(panel.total_cm(), Catch::Matchers::WithinAbs(3520.0, 1e-6));
    for (int c = 1; c <= kAutosomes; ++c) {
        REQUIRE(panel.chrom_present(c));
        CHECK_THAT(panel.chrom_span_cm(c), Catch::Matchers::WithinAbs(160.0, 1e-9));
    }
    REQUIRE(panel.has_freqs());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        CHECK(panel.alt_freq(i) >= 0.1);
        CHECK(panel.alt_freq(i) <= 0.9);
    }
}

TEST_CASE("generate_panel is deterministic per seed and validates arguments") {
    SnpPanel a = generate_panel(50, 80.0, 9);
    SnpPanel b = generate_panel(50, 80.0, 9);
    CHECK(a.definition_text() == b.definition_text());
    CHECK(render_freqs(a) == render_freqs(b));
    SnpPanel c = generate_panel(50, 80.0, 10);
    CHECK(a.definition_text() != c.definition_text());
    CHECK_THROWS_AS(generate_panel(1, 80.0, 1), Error);
    CHECK_THROWS_AS(generate_panel(50, 0.0, 1), Error);
}

TEST_CASE("panel definition file round-trips") {
    SnpPanel a = generate_panel(40, 60.0, 3);
    SnpPanel b = SnpPanel::parse_definition(a.definition_text());
    CHECK(a.definition_text() == b.definition_text());
    CHECK(a.digest() == b.digest());
    auto freqs = parse_freqs(render_freqs(a), b);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK_THAT(freqs[i], Catch::Matchers::WithinAbs(a.alt_freq(i), 1e-6));
}

TEST_CASE("generate_pedigree builds the expected family structure") {
    Pedigree ped = generate_pedigree({2, 2, 1}, 5);
    // One founder couple, 2 children + 2 spouses, 4 grandchildren.
    CHECK(ped.size() == 10);
    ped.validate();
    int founders = 0, gen2 = 0;
    for (const auto& m : ped.members()) {
        if (m.is_founder()) ++founders;
        if (m.generation == 2) ++gen2;
    }
    CHECK(founders == 4);  // 2 original + 2 married-in spouses
    CHECK(gen2 == 4);

    // Two siblings share both parent ids.
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> couples;
    for (const auto& m : ped.members())
        if (!m.is_founder() && m.generation == 1) couples[{m.mother, m.father}]++;
    REQUIRE(couples.size() == 1);
    CHECK(couples.begin()->second == 2);

    CHECK_THROWS_AS(generate_pedigree({1, 2, 1}, 5), Error);
    CHECK_THROWS_AS(generate_pedigree({2, 0, 1}, 5), Error);
}

TEST_CASE("pedigree kinship gives textbook relationship ranks") {
    Pedigree ped = generate_pedigree({4, 2, 1}, 5);
    auto child = [&](std::uint32_t parent) {
        for (std::uint32_t i = 0; i < ped.size(); ++i)
            if (ped.member(i).mother == parent || ped.member(i).father == parent) return i;
        return Pedigree::npos;
    };
    std::uint32_t f = ped.find("g0_f000a");
    REQUIRE(f != Pedigree::npos);
    std::uint32_t c1 = child(f);
    std::uint32_t g1 = child(c1);
    CHECK(ped.relationship_rank(f, f) == 0);
    CHECK(ped.relationship_rank(f, c1) == 1);
    CHECK(ped.relationship_rank(f, g1) == 2);
    // Siblings at generation 1.
    std::uint32_t sib = Pedigree::npos;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (i != c1 && !ped.member(i).is_founder() &&
            ped.member(i).mother == ped.member(c1).mother)
            sib = i;
    REQUIRE(sib != Pedigree::npos);
    CHECK(ped.relationship_rank(c1, sib) == 1);
    // First cousins: children of siblings.
    std::uint32_t cousin = child(sib);
    CHECK(ped.relationship_rank(g1, cousin) == 3);
    // 2nd cousins: grandchildren of siblings.
    CHECK(ped.relationship_rank(child(g1), child(cousin)) == 5);
    // Founder spouses are unrelated to the other line.
    std::uint32_t spouse = ped.find("g1_s000");
    REQUIRE(spouse != Pedigree::npos);
    CHECK(ped.relationship_rank(f, spouse) == Pedigree::kUnrelatedRank);
    // Pedigree file round-trip.
    Pedigree back = Pedigree::parse(ped.render());
    CHECK(back.render() == ped.render());
}

TEST_CASE("meiosis crossover count matches Poisson(length in Morgans)") {
    // Two markers per chromosome keep each meiosis O(1); the Poisson draw is
    // what is under test.
    auto panel = std::make_shared<SnpPanel>(generate_panel(2, 160.0, 2));
    Rng rng(202);
    LabeledDiplotype founder = draw_founder(*panel, 0, rng);
    founder.d.panel = panel;
    const int n = 10000;
    double crossovers = 0.0;
    for (int i = 0; i < n; ++i) crossovers += meiosis(founder, *panel, rng).n_crossovers;
    const double mean_per_chrom = crossovers / (static_cast<double>(n) * kAutosomes);
    CHECK_THAT(mean_per_chrom, Catch::Matchers::WithinAbs(1.6, 0.05));
}

TEST_CASE("meiosis carries labels consistently and no-crossover chromosomes copy a strand") {
    auto panel = small_panel(17, 80, 120.0);
    Rng rng(55);
    LabeledDiplotype mother = draw_founder(*panel, 3, rng);
    mother.d.panel = panel;
    bool saw_unswitched_chromosome = false;
    for (int rep = 0; rep < 20; ++rep) {
        Gamete g = meiosis(mother, *panel, rng);
        auto labels = expand_labels(g.labels, panel->size());
        for (std::size_t m = 0; m < panel->size(); ++m) {
            REQUIRE(labels[m] / 2 == 3);  // founder index
            const auto& src = (labels[m] % 2 == 0) ? mother.d.hap0 : mother.d.hap1;
            REQUIRE(g.alleles[m] == src[m]);
        }
        // A chromosome with a single label segment equals one parent strand.
        for (int c = 1; c <= kAutosomes; ++c) {
            std::size_t lo = panel->chrom_begin(c), hi = panel->chrom_end(c);
            bool uniform = true;
            for (std::size_t m = lo + 1; m < hi; ++m)
                if (labels[m] != labels[lo]) uniform = false;
            if (!uniform) continue;
            saw_unswitched_chromosome = true;
            const auto& src = (labels[lo] % 2 == 0) ? mother.d.hap0 : mother.d.hap1;
            for (std::size_t m = lo; m < hi; ++m) REQUIRE(g.alleles[m] == src[m]);
        }
    }
    CHECK(saw_unswitched_chromosome);
}

TEST_CASE("simulate_genotypes: Mendelian construction and label conservation") {
    auto panel = small_panel(21, 50, 90.0);
    Pedigree ped = generate_pedigree({3, 2, 1}, 8);
    SimCohort cohort = simulate_genotypes(ped, panel, 8);

    // Label conservation: every labeled interval replays founder alleles.
    for (std::uint32_t i = 0; i < ped.size(); ++i) {
        for (int hap = 0; hap < 2; ++hap) {
            const auto& labels = hap == 0 ? cohort.of(i).labels0 : cohort.of(i).labels1;
            const auto& alleles = hap == 0 ? cohort.of(i).d.hap0 : cohort.of(i).d.hap1;
            auto expanded = expand_labels(labels, panel->size());
            for (std::size_t m = 0; m < panel->size(); ++m) {
                std::uint32_t founder = static_cast<std::uint32_t>(expanded[m] / 2);
                REQUIRE(ped.member(founder).is_founder());
                const auto& src = (expanded[m] % 2 == 0) ? cohort.of(founder).d.hap0
                                                         : cohort.of(founder).d.hap1;
                REQUIRE(alleles[m] == src[m]);
            }
        }
    }

    // Child shares one labeled allele with each parent at every marker;
    // distinct founders share nothing.
    std::uint32_t some_child = Pedigree::npos;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (!ped.member(i).is_founder()) some_child = i;
    REQUIRE(some_child != Pedigree::npos);
    const auto& child = cohort.of(some_child);
    auto c0 = expand_labels(child.labels0, panel->size());
    auto c1 = expand_labels(child.labels1, panel->size());
    for (int which = 0; which < 2; ++which) {
        std::uint32_t parent = which == 0 ? ped.member(some_child).mother
                                          : ped.member(some_child).father;
        auto p0 = expand_labels(cohort.of(parent).labels0, panel->size());
        auto p1 = expand_labels(cohort.of(parent).labels1, panel->size());
        const auto& chap = which == 0 ? c0 : c1;
        for (std::size_t m = 0; m < panel->size(); ++m)
            REQUIRE((chap[m] == p0[m] || chap[m] == p1[m]));
    }
    auto founders = ped.founders();
    auto fa = expand_labels(cohort.of(founders[0]).labels0, panel->size());
    auto fb = expand_labels(cohort.of(founders[1]).labels0, panel->size());
    for (std::size_t m = 0; m < panel->size(); ++m) REQUIRE(fa[m] != fb[m]);
}

TEST_CASE("simulate_genotypes is deterministic per seed") {
    auto panel = small_panel(4, 30, 70.0);
    Pedigree ped = generate_pedigree({3, 2, 1}, 4);
    SimCohort a = simulate_genotypes(ped, panel, 99);
    SimCohort b = simulate_genotypes(ped, panel, 99);
    for (std::uint32_t i = 0; i < ped.size(); ++i) {
        CHECK(a.of(i).d.hap0 == b.of(i).d.hap0);
        CHECK(a.of(i).d.hap1 == b.of(i).d.hap1);
    }
    CHECK(render_labels(a) == render_labels(b));
    SimCohort c = simulate_genotypes(ped, panel, 100);
    bool any_difference = false;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (a.of(i).d.hap0 != c.of(i).d.hap0) any_difference = true;
    CHECK(any_difference);
}

TEST_CASE("founder genotypes track Hardy-Weinberg at cohort scale") {
    auto panel = small_panel(31, 40, 80.0);  // 880 markers
    Pedigree ped = generate_pedigree({2, 1, 120}, 31);
    SimCohort cohort = simulate_genotypes(ped, panel, 31);
    auto founders = ped.founders();
    REQUIRE(founders.size() >= 300);
    double worst = 0.0, total_dev = 0.0;
    std::size_t n_props = 0;
    for (std::size_t m = 0; m < panel->size(); ++m) {
        int counts[3] = {0, 0, 0};
        for (std::uint32_t f : founders) {
            const auto& d = cohort.of(f).d;
            counts[d.hap0[m] + d.hap1[m]]++;
        }
        const double q = panel->alt_freq(m), p = 1.0 - q;
        const double n = static_cast<double>(founders.size());
        const double expected[3] = {p * p, 2 * p * q, q * q};
        for (int k = 0; k < 3; ++k) {
            double dev = std::abs(counts[k] / n - expected[k]);
            worst = std::max(worst, dev);
            total_dev += dev;
            ++n_props;
        }
    }
    CHECK(worst < 0.15);
    CHECK(total_dev / static_cast<double>(n_props) < 0.02);
}

TEST_CASE("inject_genotyping_error obeys its rate") {
    auto panel = std::make_shared<SnpPanel>(generate_panel(2000, 160.0, 12));
    Rng rng(13);
    GenotypeProfile g = random_profile(panel, rng);
    REQUIRE(g.size() == 44000);

    GenotypeProfile same = inject_genotyping_error(g, 0.0, 7);
    CHECK(same.calls == g.calls);

    GenotypeProfile flipped = inject_genotyping_error(g, 1.0, 7);
    std::size_t unchanged = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (flipped.call(i) == g.call(i)) ++unchanged;
    CHECK(unchanged == 0);

    GenotypeProfile noisy = inject_genotyping_error(g, 0.01, 7);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (noisy.call(i) != g.call(i)) ++changed;
    // Binomial(44000, 0.01): mean 440, the spec pins +/-4 sigma.
    CHECK(changed >= 352);
    CHECK(changed <= 528);

    // Missing calls stay missing.
    g.calls.set(5, GenotypeCall::Missing);
    GenotypeProfile still = inject_genotyping_error(g, 1.0, 3);
    CHECK(still.call(5) == GenotypeCall::Missing);

    CHECK_THROWS_AS(inject_genotyping_error(g, -0.1, 1), Error);
    CHECK_THROWS_AS(inject_genotyping_error(g, 1.1, 1), Error);
}

TEST_CASE("cohort export writes a loadable directory") {
    namespace fs = std::filesystem;
    auto panel = small_panel(6, 25, 60.0);
    Pedigree ped = generate_pedigree({2, 2, 1}, 6);
    SimCohort cohort = simulate_genotypes(ped, panel, 6);
    fs::path dir = fs::temp_directory_path() / "ibdlab_test_cohort";
    fs::remove_all(dir);
    export_cohort(cohort, dir);

    Pedigree back = Pedigree::parse(read_text_file((dir / "pedigree.tsv").string()));
    CHECK(back.render() == ped.render());
    SnpPanel panel_back = SnpPanel::parse_definition(read_text_file((dir / "panel.tsv").string()));
    CHECK(panel_back.digest() == panel->digest());
    for (const auto& m : ped.members()) {
        std::string text = read_text_file((dir / "profiles" / (m.id + ".cp")).string());
        Bytes bytes(text.begin(), text.end());
        auto [profile, meta] = parse_canonical(bytes, panel);
        CHECK(meta.profile_id == m.id);
        CHECK(profile.missing_count() == 0);
    }
    fs::remove_all(dir);
}
