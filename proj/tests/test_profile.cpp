#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "ibdlab/profile.hpp"
#include "test_util.hpp"

using namespace ibdlab;
using testutil::sample_diplotype;
using testutil::sample_metadata;
using testutil::sample_profile;
using testutil::small_panel;

namespace {

// Panel with known alleles at hand-picked markers for the raw-format cases.
PanelPtr fixed_panel() {
    std::vector<Marker> markers;
    markers.push_back({"rs10", 1, 1000, 0.0, 'A', 'G'});
    markers.push_back({"rs11", 1, 2000, 1.5, 'C', 'T'});
    markers.push_back({"rs12", 1, 3000, 3.0, 'G', 'A'});
    markers.push_back({"rs20", 2, 500, 0.0, 'T', 'C'});
    markers.push_back({"rs21", 2, 900, 2.0, 'A', 'C'});
    return std::make_shared<SnpPanel>(std::move(markers));
}

std::vector<std::string> lines_of(const Bytes& bytes) {
    std::string text(bytes.begin(), bytes.end());
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("parse_raw_profile maps genotype characters against panel alleles") {
    auto panel = fixed_panel();
    auto g = parse_raw_profile("# exported by toolkit\n"
                               "rs10\t1\t1000\tAA\n"
                               "rs11\t1\t2000\tCT\n"
                               "rs12\t1\t3000\tAA\n"
                               "rs20\t2\t500\t--\n",
                               panel);
    CHECK(g.call(0) == GenotypeCall::HomRef);
    CHECK(g.call(1) == GenotypeCall::Het);
    CHECK(g.call(2) == GenotypeCall::HomAlt);  // alt at rs12 is A
    CHECK(g.call(3) == GenotypeCall::Missing);
    CHECK(g.call(4) == GenotypeCall::Missing);  // absent from the document
}

TEST_CASE("parse_raw_profile heterozygote is order-insensitive") {
    auto panel = fixed_panel();
    auto a = parse_raw_profile("rs10\t1\t1000\tAG\n", panel);
    auto b = parse_raw_profile("rs10\t1\t1000\tGA\n", panel);
    CHECK(a.call(0) == GenotypeCall::Het);
    CHECK(b.call(0) == GenotypeCall::Het);
}

TEST_CASE("parse_raw_profile missing-call count matches an independent scan") {
    auto panel = small_panel(3, 20, 50.0);  // 440 markers
    Rng rng(99);
    // Render every marker but drop one line.
    GenotypeProfile full = sample_profile(panel, rng);
    std::string text = render_raw_profile(full);
    // Drop the 17th data line.
    std::vector<std::string> kept;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (n++ != 17) kept.push_back(line);
    std::string doc;
    for (const auto& l : kept) doc += l + "\n";

    // Independent oracle: count panel rsids present in the document.
    std::set<std::string> present;
    std::istringstream in2(doc);
    while (std::getline(in2, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::string rsid = line.substr(0, line.find('\t'));
        if (panel->find(rsid) != SnpPanel::npos) present.insert(rsid);
    }
    const std::size_t expected_missing = panel->size() - present.size();
    REQUIRE(expected_missing == 1);

    auto g = parse_raw_profile(doc, panel);
    CHECK(g.missing_count() == expected_missing);
}

TEST_CASE("parse_raw_profile rejects out-of-grammar documents with a position") {
    auto panel = fixed_panel();
    CHECK_THROWS_AS(parse_raw_profile("rs10\t1\t1000\n", panel), ParseError);
    CHECK_THROWS_AS(parse_raw_profile("rs10\t1\t1000\tAZ\n", panel), ParseError);
    CHECK_THROWS_AS(parse_raw_profile("rs10\t1\t1000\tCC\n", panel), ParseError);  // not ref/alt
    CHECK_THROWS_AS(parse_raw_profile("rs10\t1\t1000\tA-\n", panel), ParseError);
    CHECK_THROWS_AS(parse_raw_profile("rs10\t1\t1000\tAA\nrs10\t1\t1000\tAA\n", panel),
                    ParseError);
    CHECK_THROWS_AS(parse_raw_profile("rs10\tx\t1000\tAA\n", panel), ParseError);
    try {
        parse_raw_profile("rs10\t1\t1000\tAA\nbroken line\n", panel);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
    // Unknown rsids are skipped, not errors.
    auto g = parse_raw_profile("rs9999\t9\t42\tAA\n", panel);
    CHECK(g.missing_count() == panel->size());
}

TEST_CASE("canonical serialization is deterministic and round-trips") {
    auto panel = small_panel();
    Rng rng(5);
    for (int trial = 0; trial < 25; ++trial) {
        GenotypeProfile g = sample_profile(panel, rng, 0.05);
        ProfileMetadata m = sample_metadata(rng);
        Bytes once = serialize_canonical(g, m);
        Bytes twice = serialize_canonical(g, m);
        REQUIRE(once == twice);
        auto [g2, m2] = parse_canonical(once, panel);
        REQUIRE(m2 == m);
        REQUIRE(g2.calls == g.calls);
        REQUIRE(serialize_canonical(g2, m2) == once);
    }
}

TEST_CASE("flipping one call changes exactly one genotype line plus the digest") {
    auto panel = small_panel();
    Rng rng(6);
    GenotypeProfile g = sample_profile(panel, rng);
    ProfileMetadata m = sample_metadata(rng);
    std::size_t idx = 123;
    g.calls.set(idx, GenotypeCall::HomRef);
    Bytes before = serialize_canonical(g, m);
    g.calls.set(idx, GenotypeCall::Het);
    Bytes after = serialize_canonical(g, m);

    auto la = lines_of(before), lb = lines_of(after);
    REQUIRE(la.size() == lb.size());
    std::vector<std::size_t> diffs;
    for (std::size_t i = 0; i < la.size(); ++i)
        if (la[i] != lb[i]) diffs.push_back(i);
    REQUIRE(diffs.size() == 2);  // the genotype line and the trailing digest
    CHECK(la[diffs[0]] == panel->marker(idx).rsid + "\t0");
    CHECK(lb[diffs[0]] == panel->marker(idx).rsid + "\t1");
    CHECK(la.back() != lb.back());
    CHECK(lb.back().rfind("sha256:", 0) == 0);
}

TEST_CASE("parse_canonical rejects truncation, bad checksums and missing headers") {
    auto panel = small_panel();
    Rng rng(7);
    GenotypeProfile g = sample_profile(panel, rng);
    ProfileMetadata m = sample_metadata(rng);
    Bytes bytes = serialize_canonical(g, m);

    CHECK_THROWS_WITH(parse_canonical(Bytes{}, panel),
                      Catch::Matchers::ContainsSubstring("truncated"));

    // Alter one genotype character without fixing the digest.
    Bytes altered = bytes;
    std::string text(altered.begin(), altered.end());
    std::size_t pos = text.find("\t0\n");
    if (pos == std::string::npos) pos = text.find("\t1\n");
    REQUIRE(pos != std::string::npos);
    altered[pos + 1] = '2';
    CHECK_THROWS_WITH(parse_canonical(altered, panel),
                      Catch::Matchers::ContainsSubstring("checksum"));

    // Remove a header line and recompute the digest so only the header error
    // can fire.
    std::size_t line_start = text.find("claimed_name\t");
    std::size_t line_end = text.find('\n', line_start);
    std::string body = text.substr(0, line_start) + text.substr(line_end + 1);
    body = body.substr(0, body.rfind("sha256:"));
    std::string fixed = body + "sha256:" + sha256_hex(body) + "\n";
    CHECK_THROWS_WITH(parse_canonical(Bytes(fixed.begin(), fixed.end()), panel),
                      Catch::Matchers::ContainsSubstring("header field"));

    // Truncated genotype block, digest recomputed.
    std::string short_body = text.substr(0, text.rfind("sha256:"));
    short_body = short_body.substr(0, short_body.rfind('\n', short_body.size() - 2) + 1);
    std::string trunc = short_body + "sha256:" + sha256_hex(short_body) + "\n";
    CHECK_THROWS_WITH(parse_canonical(Bytes(trunc.begin(), trunc.end()), panel),
                      Catch::Matchers::ContainsSubstring("truncated"));
}

TEST_CASE("unphase collapses haplotypes to unordered calls") {
    auto panel = fixed_panel();
    Diplotype d(panel);
    d.hap0 = {0, 1, 1, 0, 1};
    d.hap1 = {1, 1, 0, 0, 1};
    GenotypeProfile g = unphase(d, 1);
    CHECK(g.call(0) == GenotypeCall::Het);
    CHECK(g.call(1) == GenotypeCall::HomAlt);
    CHECK(g.call(2) == GenotypeCall::Het);
    CHECK(g.call(3) == GenotypeCall::HomRef);
    CHECK(g.call(4) == GenotypeCall::HomAlt);
}

TEST_CASE("unphase is seed-free and invariant under haplotype swap") {
    auto panel = small_panel();
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        Diplotype d = sample_diplotype(panel, rng);
        GenotypeProfile a = unphase(d, 1);
        GenotypeProfile b = unphase(d, 2);
        CHECK(a.calls == b.calls);
        CHECK(a.missing_count() == 0);
        Diplotype swapped = d;
        std::swap(swapped.hap0, swapped.hap1);
        CHECK(unphase(swapped, 3).calls == a.calls);
    }
}
