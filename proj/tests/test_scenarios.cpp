#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "ibdlab/scenario.hpp"

using namespace ibdlab;

TEST_CASE("scenario config round-trips through JSON with defaults") {
    ScenarioConfig def;
    ScenarioConfig back = ScenarioConfig::from_json(def.to_json());
    CHECK(back.markers_per_chrom == def.markers_per_chrom);
    CHECK(back.pedigree.generations == def.pedigree.generations);
    CHECK(back.detector.min_markers == def.detector.min_markers);
    CHECK(back.flood_n == def.flood_n);
    CHECK(back.attack_degree == def.attack_degree);
    // Partial documents fall back to defaults.
    ScenarioConfig partial = ScenarioConfig::from_json(ojson::parse(R"({"attack":{"flood_n":7}})"));
    CHECK(partial.flood_n == 7);
    CHECK(partial.markers_per_chrom == def.markers_per_chrom);
}

TEST_CASE("investigate: identical and cousin constraints behave as specified") {
    ScenarioConfig config;
    config.pedigree = {4, 2, 1};
    World world = build_world(config, 23);
    const Pedigree& ped = world.pedigree();
    const std::uint32_t suspect = first_member_at_generation(ped, 3);
    auto cousin = find_relative_at_rank(ped, suspect, 5);
    REQUIRE(cousin.has_value());
    GenotypeProfile suspect_profile = world.genotype(suspect);

    Vault vault(world.panel, VaultPolicy{}, world.registry, world.oracle);

    // No matches: empty candidate set.
    Investigation nothing = investigate(suspect_profile, vault, ped, world.identity_to_member,
                                        config.detector, 1, 100, "inv");
    CHECK(nothing.constraints.empty());
    CHECK(nothing.candidate_set.empty());

    // Vault containing only the real 2nd cousin: the suspect is a candidate.
    upload_cohort_member(vault, world, *cousin);
    Investigation one = investigate(suspect_profile, vault, ped, world.identity_to_member,
                                    config.detector, 1, 100, "inv");
    REQUIRE(one.constraints.size() == 1);
    CHECK(std::find(one.candidate_set.begin(), one.candidate_set.end(),
                    ped.member(suspect).id) != one.candidate_set.end());

    // Adding the suspect's own truthful profile pins the candidate set to them.
    upload_cohort_member(vault, world, suspect);
    Investigation pinned = investigate(suspect_profile, vault, ped, world.identity_to_member,
                                       config.detector, 1, 100, "inv");
    REQUIRE(!pinned.ranking.empty());
    CHECK(pinned.ranking.front().member_id == ped.member(suspect).id);
    REQUIRE(!pinned.candidate_set.empty());
    CHECK(std::find(pinned.candidate_set.begin(), pinned.candidate_set.end(),
                    ped.member(suspect).id) != pinned.candidate_set.end());

    // A match whose claimed identity is unknown to the pedigree is recorded
    // and skipped.
    Rng rng(5);
    ProfileMetadata alien = spoof_metadata("Unknown Person", "unknown@x.example", "lab",
                                           "instr", kCohortEpoch, "acct-z", rng);
    AccountOutcome acct = vault.create_account({"Up", "up@x.example"});
    REQUIRE(vault.upload_profile(acct.account_id,
                                 Submission::raw(serialize_canonical(suspect_profile, alien)))
                .stored());
    Investigation with_alien = investigate(suspect_profile, vault, ped,
                                           world.identity_to_member, config.detector, 1, 100,
                                           "inv");
    CHECK(with_alien.skipped.size() == 1);
    CHECK(with_alien.constraints.size() == 2);
}

TEST_CASE("misdirection: decoy redirects the candidate set; signatures restore it") {
    ScenarioConfig config;
    ScenarioReport report = run_scenario_misdirection(config, 1);
    const ojson& off = report.data["defense_off"];
    const ojson& on = report.data["defense_on"];

    CHECK(off["real_upload"] == "stored");
    CHECK(off["decoy_upload"] == "stored");
    CHECK(off["suspect_in_baseline"] == true);
    CHECK(off["candidate_set_distorted"] == true);
    CHECK(!off["wrong_branch_members_in_post"].empty());

    CHECK(on["decoy_upload"] == "signature_rejected");
    CHECK(on["post_attack"]["candidate_set"] == on["baseline"]["candidate_set"]);
    CHECK(report.data["defended_post_equals_baseline"] == true);
    // Defense dominance: the defended run shows no distortion at all.
    CHECK(on["candidate_set_distorted"] == false);
}

TEST_CASE("false implication: triangulation pins the couple's branch, not the suspect") {
    ScenarioConfig config;
    ScenarioReport report = run_scenario_false_implication(config, 2);
    const ojson& off = report.data["defense_off"];
    const ojson& on = report.data["defense_on"];

    CHECK(off["accepted_uploads"] == 2);
    CHECK(off["baseline"]["candidate_set"].empty());  // baseline has no uploads
    CHECK(off["top_tier_all_couple_or_descendants"] == true);
    CHECK(!off["top_tier"].empty());
    CHECK(off["couple_children_in_candidates"] == true);
    CHECK(off["suspect_in_post"] == false);

    CHECK(on["accepted_uploads"] == 0);
    CHECK(on["rejected_uploads"] == 2);
    CHECK(report.data["defended_post_equals_baseline"] == true);
}

TEST_CASE("dos: fakes crowd the top slots; identity verification stops the flood") {
    ScenarioConfig config;
    ScenarioReport report = run_scenario_dos(config, 3);
    const ojson& off = report.data["defense_off"];
    const ojson& on = report.data["defense_on"];

    CHECK(off["fake_accounts_created"] == 50);
    CHECK(off["accepted_uploads"] == 50);
    CHECK(off["fake_share_before"] == 0.0);
    CHECK(off["fake_share_after"].get<double>() >= 0.9);

    CHECK(on["fake_accounts_created"] == 0);
    CHECK(on["fake_share_after"] == 0.0);
    CHECK(on["top_unchanged"] == true);
    CHECK(on["fake_share_after"].get<double>() <= off["fake_share_after"].get<double>());
}

TEST_CASE("dos with n=0 is a no-op") {
    ScenarioConfig config;
    config.flood_n = 0;
    ScenarioReport report = run_scenario_dos(config, 3);
    const ojson& off = report.data["defense_off"];
    CHECK(off["fake_accounts_created"] == 0);
    CHECK(off["fake_share_after"] == 0.0);
    CHECK(off["top_unchanged"] == true);
}

TEST_CASE("spoof: investigation resolves to the stolen identity until re-test") {
    ScenarioConfig config;
    ScenarioReport report = run_scenario_spoof(config, 4);
    const ojson& off = report.data["defense_off"];
    const ojson& on = report.data["defense_on"];

    CHECK(off["upload"] == "stored");
    CHECK(off["top_candidate_is_spoofed_identity"] == true);
    CHECK(off["retest_vs_suspect"] == "Identical");
    CHECK(off["retest_vs_claimed_identity"] != "Identical");
    CHECK(off["retest_exposes_spoof"] == true);

    CHECK(on["unsigned_upload"] == "signature_rejected");
    CHECK(on["identity_swapped_signed_upload"] == "signature_rejected");
}

TEST_CASE("insider: deletion hides a match, edits break signatures, rewrites break the chain") {
    ScenarioConfig config;
    ScenarioReport report = run_scenario_insider(config, 5);
    CHECK(report.data["deleted_match_absent"] == true);
    CHECK(report.data["modified_signature_recheck"] == "bad_signature");
    CHECK(report.data["audit_chain_ok_before"] == true);
    CHECK(report.data["audit_failure_at_or_adjacent"] == true);
    REQUIRE(!report.data["matches_before"].empty());
}

TEST_CASE("scenario runs are byte-deterministic per (config, seed)") {
    ScenarioConfig config;
    for (const char* name : {"misdirection", "dos", "spoof", "insider", "false-implication"}) {
        ScenarioReport a = run_scenario(name, config, 7);
        ScenarioReport b = run_scenario(name, config, 7);
        INFO(name);
        CHECK(a.structured_jsonl() == b.structured_jsonl());
    }
    CHECK_THROWS_AS(run_scenario("nope", config, 1), Error);
}

TEST_CASE("reports are written as text plus structured JSONL") {
    namespace fs = std::filesystem;
    ScenarioConfig config;
    config.flood_n = 5;
    ScenarioReport report = run_scenario_dos(config, 11);
    fs::path dir = fs::temp_directory_path() / "ibdlab_test_report";
    fs::remove_all(dir);
    write_report(report, dir);
    std::string jsonl = read_text_file((dir / "report.jsonl").string());
    std::string text = read_text_file((dir / "report.txt").string());
    CHECK(jsonl.find("\"record\":\"scenario\"") != std::string::npos);
    CHECK(jsonl.find("runtime") == std::string::npos);  // structured output is runtime-free
    CHECK(text.find("runtime_seconds:") != std::string::npos);
    // Each line parses as a standalone JSON record.
    std::istringstream in(jsonl);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        CHECK_NOTHROW(ojson::parse(line));
        ++lines;
    }
    CHECK(lines >= 3);
    fs::remove_all(dir);
}
