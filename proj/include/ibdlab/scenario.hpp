#pragma once
// Attack-scenario harness: reproduces the misdirection, false-implication,
// denial-of-service, metadata-spoof and insider narratives end to end, with
// and without defenses, and emits deterministic reports. Also hosts the
// simulated genealogy investigator, which sees match results, claimed
// identities and the public pedigree — never genotype storage.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ibdlab/attest.hpp"
#include "ibdlab/common.hpp"
#include "ibdlab/forge.hpp"
#include "ibdlab/ibd.hpp"
#include "ibdlab/popsim.hpp"
#include "ibdlab/profile.hpp"
#include "ibdlab/vault.hpp"

namespace ibdlab {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

struct ScenarioConfig {
    std::size_t markers_per_chrom = 2000;
    double cm_per_chrom = 160.0;
    PedigreeSpec pedigree{6, 2, 1};
    DetectorParams detector{};
    std::uint32_t max_profiles_per_account = 200;
    std::size_t flood_n = 50;
    std::size_t flood_top_k = 25;
    RelationshipDegree attack_degree = RelationshipDegree::Degree5;
    // Floor for sampled plan segment lengths. 0 = auto: long enough that a
    // planned segment always clears both detector minima, which is how a
    // competent attacker would size segments.
    double plan_min_cm = 0.0;
    int investigator_tolerance = 1;
    std::size_t investigator_top_k = 200;

    double effective_plan_min_cm(const SnpPanel& panel) const {
        if (plan_min_cm > 0.0) return plan_min_cm;
        const double markers_per_cm = static_cast<double>(panel.size()) / panel.total_cm();
        const double need = (static_cast<double>(detector.min_markers) + 8.0) / markers_per_cm;
        return std::max(detector.min_cm, need);
    }

    static ScenarioConfig from_json(const ojson& j) {
        ScenarioConfig c;
        if (j.contains("panel")) {
            c.markers_per_chrom = j["panel"].value("markers_per_chrom", c.markers_per_chrom);
            c.cm_per_chrom = j["panel"].value("cm_per_chrom", c.cm_per_chrom);
        }
        if (j.contains("pedigree")) {
            c.pedigree.generations = j["pedigree"].value("generations", c.pedigree.generations);
            c.pedigree.children_per_couple =
                j["pedigree"].value("children_per_couple", c.pedigree.children_per_couple);
            c.pedigree.founder_couples =
                j["pedigree"].value("founder_couples", c.pedigree.founder_couples);
        }
        if (j.contains("detector")) {
            const auto& d = j["detector"];
            c.detector.min_markers = d.value("min_markers", c.detector.min_markers);
            c.detector.min_cm = d.value("min_cm", c.detector.min_cm);
            c.detector.max_opposite_homozygotes_per_window =
                d.value("max_oh", c.detector.max_opposite_homozygotes_per_window);
            c.detector.full_min_markers = d.value("full_min_markers", c.detector.full_min_markers);
            c.detector.full_min_cm = d.value("full_min_cm", c.detector.full_min_cm);
        }
        if (j.contains("policy"))
            c.max_profiles_per_account =
                j["policy"].value("max_profiles_per_account", c.max_profiles_per_account);
        if (j.contains("attack")) {
            const auto& a = j["attack"];
            c.flood_n = a.value("flood_n", c.flood_n);
            c.flood_top_k = a.value("top_k", c.flood_top_k);
            if (a.contains("degree")) c.attack_degree = degree_from_string(a["degree"]);
            c.plan_min_cm = a.value("plan_min_cm", c.plan_min_cm);
        }
        if (j.contains("investigator")) {
            c.investigator_tolerance =
                j["investigator"].value("tolerance", c.investigator_tolerance);
            c.investigator_top_k = j["investigator"].value("top_k", c.investigator_top_k);
        }
        return c;
    }

    static ScenarioConfig load(const std::string& path) {
        return from_json(ojson::parse(read_text_file(path)));
    }

    ojson to_json() const {
        ojson j;
        j["panel"] = {{"markers_per_chrom", markers_per_chrom}, {"cm_per_chrom", cm_per_chrom}};
        j["pedigree"] = {{"generations", pedigree.generations},
                         {"children_per_couple", pedigree.children_per_couple},
                         {"founder_couples", pedigree.founder_couples}};
        j["detector"] = {{"min_markers", detector.min_markers},
                         {"min_cm", detector.min_cm},
                         {"max_oh", detector.max_opposite_homozygotes_per_window},
                         {"full_min_markers", detector.full_min_markers},
                         {"full_min_cm", detector.full_min_cm}};
        j["policy"] = {{"max_profiles_per_account", max_profiles_per_account}};
        j["attack"] = {{"flood_n", flood_n},
                       {"top_k", flood_top_k},
                       {"degree", to_string(attack_degree)},
                       {"plan_min_cm", plan_min_cm}};
        j["investigator"] = {{"tolerance", investigator_tolerance},
                             {"top_k", investigator_top_k}};
        return j;
    }
};

// ---------------------------------------------------------------------------
// Simulated world: panel, cohort, lab key, identity oracle.

struct World {
    PanelPtr panel;
    SimCohort cohort;
    KeyRegistry registry;
    LabKey lab_key;
    IdentityOracle oracle;
    std::map<std::string, std::uint32_t> identity_to_member;

    const Pedigree& pedigree() const { return cohort.pedigree; }
    GenotypeProfile genotype(std::uint32_t member) const { return cohort.genotype(member); }
    ProfileMetadata identity(std::uint32_t member) const {
        return cohort_identity(cohort.pedigree, member);
    }
};

inline std::uint64_t splitmix64_once(std::uint64_t x) {
    std::uint64_t s = x;
    return splitmix64(s);
}

inline World build_world(const ScenarioConfig& config, std::uint64_t seed) {
    World w;
    w.panel = std::make_shared<SnpPanel>(
        generate_panel(config.markers_per_chrom, config.cm_per_chrom,
                       splitmix64_once(seed)));
    Pedigree ped = generate_pedigree(config.pedigree, seed);
    w.cohort = simulate_genotypes(ped, w.panel, seed);
    auto [key, entry] = generate_lab_key("sim-lab", "array-*", kCohortEpoch - 86400 * 365,
                                         kCohortEpoch + 86400 * 3650, seed);
    w.lab_key = std::move(key);
    w.registry.add(std::move(entry));
    for (std::uint32_t i = 0; i < w.cohort.pedigree.size(); ++i) {
        ProfileMetadata meta = cohort_identity(w.cohort.pedigree, i);
        Identity id{meta.claimed_name, meta.claimed_email};
        w.oracle.add(id);
        w.identity_to_member.emplace(id.key(), i);
    }
    return w;
}

// Create the member's own account and upload their authentic signed profile.
inline UploadOutcome upload_cohort_member(Vault& vault, const World& world,
                                          std::uint32_t member) {
    ProfileMetadata meta = world.identity(member);
    AccountOutcome acct = vault.create_account({meta.claimed_name, meta.claimed_email});
    if (!acct.created()) throw Error("cohort account rejected: " + acct.reason);
    meta.account_id = acct.account_id;
    SignedProfile sp = sign_profile(world.genotype(member), meta, world.lab_key);
    return vault.upload_profile(acct.account_id, Submission::signed_profile(sp));
}

// ---------------------------------------------------------------------------
// Investigator

struct Constraint {
    std::string profile_id;
    std::string member_id;
    std::uint32_t member = 0;
    RelationshipDegree predicted = RelationshipDegree::DistantOrUnrelated;
};

struct ScoredCandidate {
    std::string member_id;
    int satisfied = 0;
    int total_dev = 0;
    int closest_rank = Pedigree::kUnrelatedRank;
};

struct Investigation {
    std::vector<Constraint> constraints;
    std::vector<std::string> skipped;        // matched identities absent from pedigree
    std::vector<std::string> candidate_set;  // consistent with every constraint
    std::vector<ScoredCandidate> ranking;
};

// Map each match's claimed identity into the pedigree and keep the
// individuals whose true relationship to every matched identity is within
// `tolerance` degree ranks of the prediction. The investigator trusts
// metadata; that trust is the attack surface.
inline Investigation investigate(const GenotypeProfile& query, Vault& vault,
                                 const Pedigree& pedigree,
                                 const std::map<std::string, std::uint32_t>& identity_to_member,
                                 const DetectorParams& params, int tolerance,
                                 std::size_t top_k, const std::string& actor) {
    Investigation inv;
    auto matches = vault.query_matches(query, params, top_k, actor);
    for (const MatchResult& m : matches) {
        if (m.predicted == RelationshipDegree::DistantOrUnrelated) continue;
        const StoredProfile& sp = vault.profiles().at(m.other_id);
        Identity claimed{sp.meta.claimed_name, sp.meta.claimed_email};
        auto it = identity_to_member.find(claimed.key());
        if (it == identity_to_member.end()) {
            inv.skipped.push_back(m.other_id + " as \"" + claimed.name + "\"");
            continue;
        }
        inv.constraints.push_back(
            {m.other_id, pedigree.member(it->second).id, it->second, m.predicted});
    }
    if (inv.constraints.empty()) return inv;

    for (std::uint32_t x = 0; x < pedigree.size(); ++x) {
        ScoredCandidate sc;
        sc.member_id = pedigree.member(x).id;
        for (const Constraint& c : inv.constraints) {
            const int true_rank = pedigree.relationship_rank(x, c.member);
            const int pred_rank = degree_rank(c.predicted);
            const int dev = std::abs(true_rank - pred_rank);
            if (dev <= tolerance) {
                ++sc.satisfied;
                sc.total_dev += dev;
                sc.closest_rank = std::min(sc.closest_rank, true_rank);
            }
        }
        if (sc.satisfied > 0) inv.ranking.push_back(std::move(sc));
    }
    std::sort(inv.ranking.begin(), inv.ranking.end(),
              [](const ScoredCandidate& a, const ScoredCandidate& b) {
                  if (a.satisfied != b.satisfied) return a.satisfied > b.satisfied;
                  if (a.total_dev != b.total_dev) return a.total_dev < b.total_dev;
                  if (a.closest_rank != b.closest_rank) return a.closest_rank < b.closest_rank;
                  return a.member_id < b.member_id;
              });
    const int n = static_cast<int>(inv.constraints.size());
    for (const ScoredCandidate& sc : inv.ranking)
        if (sc.satisfied == n) inv.candidate_set.push_back(sc.member_id);
    std::sort(inv.candidate_set.begin(), inv.candidate_set.end());
    return inv;
}

inline ojson investigation_json(const Investigation& inv, std::size_t ranking_limit = 25) {
    ojson j;
    j["constraints"] = ojson::array();
    for (const Constraint& c : inv.constraints)
        j["constraints"].push_back({{"profile_id", c.profile_id},
                                    {"claimed_member", c.member_id},
                                    {"predicted", to_string(c.predicted)}});
    j["skipped"] = inv.skipped;
    j["candidate_set"] = inv.candidate_set;
    j["ranking"] = ojson::array();
    for (std::size_t i = 0; i < inv.ranking.size() && i < ranking_limit; ++i) {
        const ScoredCandidate& sc = inv.ranking[i];
        j["ranking"].push_back({{"member", sc.member_id},
                                {"satisfied", sc.satisfied},
                                {"total_dev", sc.total_dev},
                                {"closest_rank", sc.closest_rank}});
    }
    return j;
}

// ---------------------------------------------------------------------------
// Reports

struct ScenarioReport {
    std::string name;
    std::uint64_t seed = 0;
    ojson data;  // deterministic structured sections
    double runtime_seconds = 0.0;

    // Line-delimited structured records; excludes runtime so identical
    // (config, seed) runs are byte-identical.
    std::string structured_jsonl() const {
        std::string out;
        ojson header = {{"record", "scenario"}, {"name", name}, {"seed", seed}};
        out += header.dump() + "\n";
        for (const auto& [key, value] : data.items()) {
            ojson line = {{"record", key}, {"value", value}};
            out += line.dump() + "\n";
        }
        return out;
    }

    std::string human_text() const {
        std::string out;
        out += "scenario: " + name + "\n";
        out += "seed: " + std::to_string(seed) + "\n";
        out += data.dump(2) + "\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "runtime_seconds: %.3f\n", runtime_seconds);
        out += buf;
        return out;
    }
};

inline void write_report(const ScenarioReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_text_file((out_dir / "report.jsonl").string(), report.structured_jsonl());
    write_text_file((out_dir / "report.txt").string(), report.human_text());
}

// ---------------------------------------------------------------------------
// Pedigree selection helpers

inline std::uint32_t first_member_at_generation(const Pedigree& ped, int gen,
                                                bool non_founder = true) {
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (ped.member(i).generation == gen && (!non_founder || !ped.member(i).is_founder()))
            return i;
    throw Error("pedigree has no member at generation " + std::to_string(gen));
}

// First same-generation relative of `who` at exactly `rank`.
inline std::optional<std::uint32_t> find_relative_at_rank(const Pedigree& ped,
                                                          std::uint32_t who, int rank) {
    for (std::uint32_t i = 0; i < ped.size(); ++i) {
        if (i == who) continue;
        if (ped.member(i).generation != ped.member(who).generation) continue;
        if (ped.member(i).is_founder()) continue;
        if (ped.relationship_rank(who, i) == rank) return i;
    }
    return std::nullopt;
}

// Earliest-generation founder ancestor of `of` that is unrelated to `avoid`.
inline std::optional<std::uint32_t> find_unrelated_founder_ancestor(const Pedigree& ped,
                                                                    std::uint32_t of,
                                                                    std::uint32_t avoid) {
    std::optional<std::uint32_t> best;
    for (std::uint32_t i = 0; i < ped.size(); ++i) {
        if (!ped.member(i).is_founder()) continue;
        if (!ped.is_ancestor_of(i, of)) continue;
        if (ped.kinship(i, avoid) > 0.0) continue;
        if (!best || ped.member(i).generation < ped.member(*best).generation) best = i;
    }
    return best;
}

inline std::set<std::uint32_t> descendants_of(const Pedigree& ped, std::uint32_t anc) {
    std::set<std::uint32_t> out;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (ped.is_ancestor_of(anc, i)) out.insert(i);
    return out;
}

// ---------------------------------------------------------------------------
// Scenario runners. Each builds the world from (config, seed), plays the
// attack with defenses off, replays it with the relevant defense on, and
// reports both outcomes.

namespace detail_scen {

inline ForgedProfile forge_decoy(const World& world, const GenotypeProfile& target,
                                 const std::string& target_id, const ScenarioConfig& config,
                                 Rng& rng) {
    SegmentPlan plan = plan_segments(config.attack_degree, *world.panel, rng,
                                     config.effective_plan_min_cm(*world.panel));
    GenotypeProfile base = random_profile(world.panel, rng);
    return splice(target, base, plan, rng, target_id, "synthetic-base");
}

inline Submission unsigned_submission(const ForgedProfile& forged) {
    return Submission::raw(serialize_canonical(forged.genotype, forged.spoofed));
}

inline bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace detail_scen

// Misdirection: the suspect's 2nd cousin is already in the database; the
// attacker uploads a synthetic 2nd cousin of the suspect under the identity
// of someone related to that cousin but not to the suspect, pushing the
// investigation to the wrong branch of the family tree.
inline ScenarioReport run_scenario_misdirection(const ScenarioConfig& config,
                                                std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    if (config.pedigree.generations < 4)
        throw Error("misdirection needs a pedigree with >= 4 generations");
    World world = build_world(config, seed);
    const Pedigree& ped = world.pedigree();

    const std::uint32_t suspect = first_member_at_generation(ped, 3);
    auto cousin = find_relative_at_rank(ped, suspect, 5);
    if (!cousin) throw Error("config lacks a 2nd cousin for the suspect");
    auto decoy_identity = find_unrelated_founder_ancestor(ped, *cousin, suspect);
    if (!decoy_identity) throw Error("config lacks a wrong-branch identity");
    GenotypeProfile suspect_profile = world.genotype(suspect);

    auto run_phase = [&](bool require_signature, ojson& phase) {
        VaultPolicy policy;
        policy.require_signature = require_signature;
        policy.max_profiles_per_account = config.max_profiles_per_account;
        Vault vault(world.panel, policy, world.registry, world.oracle);

        UploadOutcome real = upload_cohort_member(vault, world, *cousin);
        Investigation baseline = investigate(suspect_profile, vault, ped,
                                             world.identity_to_member, config.detector,
                                             config.investigator_tolerance,
                                             config.investigator_top_k, "investigator");

        AccountOutcome attacker =
            vault.create_account({"Decoy Uploader", "decoy@attacker.example"});
        Rng rng = Rng::substream(seed, "misdirection:attack");
        ForgedProfile decoy =
            detail_scen::forge_decoy(world, suspect_profile, ped.member(suspect).id, config, rng);
        ProfileMetadata wrong = world.identity(*decoy_identity);
        decoy.spoofed = spoof_metadata(wrong.claimed_name, wrong.claimed_email, "unknown-lab",
                                       "unknown-instrument", kCohortEpoch,
                                       attacker.created() ? attacker.account_id : "none", rng);
        UploadOutcome decoy_up =
            attacker.created()
                ? vault.upload_profile(attacker.account_id, detail_scen::unsigned_submission(decoy))
                : UploadOutcome{UploadStatus::UnknownAccount, decoy.spoofed.profile_id,
                                "account rejected"};
        Investigation post = investigate(suspect_profile, vault, ped,
                                         world.identity_to_member, config.detector,
                                         config.investigator_tolerance,
                                         config.investigator_top_k, "investigator");

        std::vector<std::string> wrong_branch;
        for (const std::string& id : post.candidate_set) {
            std::uint32_t m = ped.find(id);
            if (ped.relationship_rank(m, suspect) > 7 &&
                ped.relationship_rank(m, *decoy_identity) <= 7)
                wrong_branch.push_back(id);
        }
        phase["real_upload"] = to_string(real.status);
        phase["decoy_upload"] = to_string(decoy_up.status);
        phase["decoy_reason"] = decoy_up.reason;
        phase["accepted_uploads"] = static_cast<int>(real.stored()) + decoy_up.stored();
        phase["rejected_uploads"] = static_cast<int>(!real.stored()) + !decoy_up.stored();
        phase["baseline"] = investigation_json(baseline);
        phase["post_attack"] = investigation_json(post);
        phase["suspect_in_baseline"] =
            detail_scen::contains(baseline.candidate_set, ped.member(suspect).id);
        phase["suspect_in_post"] =
            detail_scen::contains(post.candidate_set, ped.member(suspect).id);
        phase["candidate_set_distorted"] = baseline.candidate_set != post.candidate_set;
        phase["wrong_branch_members_in_post"] = wrong_branch;
        return std::make_pair(baseline.candidate_set, post.candidate_set);
    };

    ScenarioReport report;
    report.name = "misdirection";
    report.seed = seed;
    report.data["config"] = config.to_json();
    report.data["cast"] = {{"suspect", ped.member(suspect).id},
                           {"real_second_cousin", ped.member(*cousin).id},
                           {"decoy_identity", ped.member(*decoy_identity).id}};
    ojson off, on;
    auto [baseline_off, post_off] = run_phase(false, off);
    auto [baseline_on, post_on] = run_phase(true, on);
    report.data["defense_off"] = off;
    report.data["defense_on"] = on;
    report.data["defended_post_equals_baseline"] = baseline_on == post_on;
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// False implication: two synthetic relatives on different family branches,
// spoofed so the investigation triangulates onto a couple and its
// descendants. The couple is the founder couple, which makes the implication
// provable: the only individuals related to both branch identities are the
// couple and the lineage below it.
inline ScenarioReport run_scenario_false_implication(const ScenarioConfig& config,
                                                     std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    if (config.pedigree.generations < 4)
        throw Error("false implication needs a pedigree with >= 4 generations");
    World world = build_world(config, seed);
    const Pedigree& ped = world.pedigree();
    const int leaf_gen = config.pedigree.generations;

    const std::uint32_t couple_a = ped.find("g0_f000a");
    const std::uint32_t couple_b = ped.find("g0_f000b");
    if (couple_a == Pedigree::npos || couple_b == Pedigree::npos)
        throw Error("pedigree lacks the founder couple");
    std::vector<std::uint32_t> children;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (ped.member(i).mother == couple_a && ped.member(i).father == couple_b)
            children.push_back(i);
    if (children.size() < 2) throw Error("target couple needs descendants on two branches");
    auto deepest_descendant = [&](std::uint32_t branch) -> std::uint32_t {
        for (std::uint32_t i = 0; i < ped.size(); ++i)
            if (ped.member(i).generation == leaf_gen && ped.is_ancestor_of(branch, i))
                return i;
        throw Error("branch has no descendants at the leaf generation");
    };
    const std::uint32_t w1 = deepest_descendant(children[0]);
    const std::uint32_t w2 = deepest_descendant(children[1]);

    // Plans sized one rank closer than the leaf depth detect at the depth of
    // the couple, so the couple and its nearest descendants fit both
    // constraints and nobody deeper does.
    ScenarioConfig attack = config;
    const int plan_rank = std::clamp(leaf_gen - 1, 2, 7);
    attack.attack_degree = static_cast<RelationshipDegree>(
        static_cast<int>(RelationshipDegree::Degree2) + plan_rank - 2);

    // Suspect: a generation-3 member that is not an ancestor of either
    // claimed identity.
    std::uint32_t suspect = Pedigree::npos;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (ped.member(i).generation == 3 && !ped.member(i).is_founder() &&
            !ped.is_ancestor_of(i, w1) && !ped.is_ancestor_of(i, w2)) {
            suspect = i;
            break;
        }
    if (suspect == Pedigree::npos) throw Error("config lacks an off-branch suspect");
    GenotypeProfile suspect_profile = world.genotype(suspect);
    std::set<std::uint32_t> implicated = descendants_of(ped, couple_a);

    auto run_phase = [&](bool require_signature, ojson& phase) {
        VaultPolicy policy;
        policy.require_signature = require_signature;
        policy.max_profiles_per_account = config.max_profiles_per_account;
        Vault vault(world.panel, policy, world.registry, world.oracle);

        // Baseline vault is empty: no uploads at all.
        Investigation baseline = investigate(suspect_profile, vault, ped,
                                             world.identity_to_member, config.detector,
                                             config.investigator_tolerance,
                                             config.investigator_top_k, "investigator");
        AccountOutcome attacker =
            vault.create_account({"Branch Implicator", "implicate@attacker.example"});
        int accepted = 0, rejected = 0;
        for (int k = 0; k < 2; ++k) {
            Rng rng = Rng::substream(seed, "false-implication:" + std::to_string(k));
            ForgedProfile decoy = detail_scen::forge_decoy(world, suspect_profile,
                                                           ped.member(suspect).id, attack, rng);
            ProfileMetadata claimed = world.identity(k == 0 ? w1 : w2);
            decoy.spoofed = spoof_metadata(claimed.claimed_name, claimed.claimed_email,
                                           "unknown-lab", "unknown-instrument", kCohortEpoch,
                                           attacker.created() ? attacker.account_id : "none",
                                           rng);
            UploadOutcome up = attacker.created()
                                   ? vault.upload_profile(attacker.account_id,
                                                          detail_scen::unsigned_submission(decoy))
                                   : UploadOutcome{};
            (up.stored() ? accepted : rejected)++;
        }
        Investigation post = investigate(suspect_profile, vault, ped,
                                         world.identity_to_member, config.detector,
                                         config.investigator_tolerance,
                                         config.investigator_top_k, "investigator");
        bool top_tier_implicated = !post.ranking.empty();
        const int best = post.ranking.empty() ? 0 : post.ranking.front().satisfied;
        std::vector<std::string> top_tier;
        for (const ScoredCandidate& sc : post.ranking) {
            if (sc.satisfied != best) break;
            top_tier.push_back(sc.member_id);
            std::uint32_t m = ped.find(sc.member_id);
            if (!(m == couple_a || m == couple_b || implicated.count(m)))
                top_tier_implicated = false;
        }
        phase["accepted_uploads"] = accepted;
        phase["rejected_uploads"] = rejected;
        phase["baseline"] = investigation_json(baseline);
        phase["post_attack"] = investigation_json(post);
        phase["top_tier"] = top_tier;
        phase["top_tier_all_couple_or_descendants"] = top_tier_implicated;
        bool children_present = false;
        for (std::uint32_t c : children)
            if (detail_scen::contains(post.candidate_set, ped.member(c).id))
                children_present = true;
        phase["couple_children_in_candidates"] = children_present;
        phase["suspect_in_post"] =
            detail_scen::contains(post.candidate_set, ped.member(suspect).id);
        return std::make_pair(baseline.candidate_set, post.candidate_set);
    };

    ScenarioReport report;
    report.name = "false_implication";
    report.seed = seed;
    report.data["config"] = config.to_json();
    report.data["cast"] = {{"suspect", ped.member(suspect).id},
                           {"couple", ojson::array({ped.member(couple_a).id,
                                                    ped.member(couple_b).id})},
                           {"branch_identities", ojson::array({ped.member(w1).id,
                                                               ped.member(w2).id})},
                           {"plan_degree", to_string(attack.attack_degree)}};
    ojson off, on;
    auto [baseline_off, post_off] = run_phase(false, off);
    auto [baseline_on, post_on] = run_phase(true, on);
    report.data["defense_off"] = off;
    report.data["defense_on"] = on;
    report.data["defended_post_equals_baseline"] = baseline_on == post_on;
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// Denial of service: flood the database with synthetic relatives under many
// fabricated accounts so fakes crowd the top match slots.
inline ScenarioReport run_scenario_dos(const ScenarioConfig& config, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    World world = build_world(config, seed);
    const Pedigree& ped = world.pedigree();
    const std::uint32_t suspect = first_member_at_generation(ped, 3);
    auto cousin = find_relative_at_rank(ped, suspect, 5);
    if (!cousin) throw Error("config lacks a 2nd cousin for the suspect");
    GenotypeProfile suspect_profile = world.genotype(suspect);

    std::vector<ForgedProfile> flood;
    if (config.flood_n > 0) {
        flood = generate_flood(suspect_profile, config.flood_n, config.attack_degree,
                               world.panel, splitmix64_once(seed ^ 0xD05ull),
                               config.effective_plan_min_cm(*world.panel),
                               ped.member(suspect).id);
    }

    auto run_phase = [&](bool require_identity, ojson& phase) {
        VaultPolicy policy;
        policy.require_identity_verification = require_identity;
        policy.max_profiles_per_account = config.max_profiles_per_account;
        Vault vault(world.panel, policy, world.registry, world.oracle);
        upload_cohort_member(vault, world, *cousin);

        auto top_ids = [&](const std::vector<MatchResult>& rs) {
            std::vector<std::string> ids;
            for (const auto& r : rs) ids.push_back(r.other_id);
            return ids;
        };
        auto before =
            vault.query_matches(suspect_profile, config.detector, config.flood_top_k, "investigator");

        std::set<std::string> fake_ids;
        int fake_accounts = 0, accepted = 0, rejected = 0;
        for (const ForgedProfile& f : flood) {
            AccountOutcome acct =
                vault.create_account({f.spoofed.claimed_name, f.spoofed.claimed_email});
            if (!acct.created()) {
                ++rejected;
                continue;
            }
            ++fake_accounts;
            ProfileMetadata meta = f.spoofed;
            meta.account_id = acct.account_id;
            UploadOutcome up = vault.upload_profile(
                acct.account_id, Submission::raw(serialize_canonical(f.genotype, meta)));
            if (up.stored()) {
                ++accepted;
                fake_ids.insert(up.profile_id);
            } else {
                ++rejected;
            }
        }
        auto after =
            vault.query_matches(suspect_profile, config.detector, config.flood_top_k, "investigator");
        auto fake_share = [&](const std::vector<MatchResult>& rs) {
            if (rs.empty()) return 0.0;
            std::size_t fakes = 0;
            for (const auto& r : rs) fakes += fake_ids.count(r.other_id);
            return static_cast<double>(fakes) / static_cast<double>(rs.size());
        };
        phase["fake_accounts_created"] = fake_accounts;
        phase["accepted_uploads"] = accepted;
        phase["rejected_uploads_or_accounts"] = rejected;
        phase["top_k"] = config.flood_top_k;
        phase["top_before"] = top_ids(before);
        phase["top_after"] = top_ids(after);
        phase["fake_share_before"] = fake_share(before);
        phase["fake_share_after"] = fake_share(after);
        phase["top_unchanged"] = top_ids(before) == top_ids(after);
    };

    ScenarioReport report;
    report.name = "dos";
    report.seed = seed;
    report.data["config"] = config.to_json();
    report.data["cast"] = {{"suspect", ped.member(suspect).id},
                           {"real_second_cousin", ped.member(*cousin).id}};
    report.data["flood_n"] = config.flood_n;
    ojson off, on;
    run_phase(false, off);
    run_phase(true, on);
    report.data["defense_off"] = off;
    report.data["defense_on"] = on;
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// Metadata spoof: the suspect uploads their own true genotype under a
// deceased cohort member's identity. The investigation resolves to the
// spoofed identity; privileged re-testing against ground truth exposes it.
inline ScenarioReport run_scenario_spoof(const ScenarioConfig& config, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    World world = build_world(config, seed);
    const Pedigree& ped = world.pedigree();
    const std::uint32_t suspect = first_member_at_generation(ped, 3);
    // "Deceased": an early-generation founder unrelated to the suspect.
    std::uint32_t deceased = Pedigree::npos;
    for (std::uint32_t i = 0; i < ped.size(); ++i)
        if (ped.member(i).is_founder() && ped.member(i).generation >= 1 &&
            ped.kinship(i, suspect) == 0.0) {
            deceased = i;
            break;
        }
    if (deceased == Pedigree::npos) throw Error("config lacks an unrelated deceased identity");
    GenotypeProfile suspect_profile = world.genotype(suspect);

    ScenarioReport report;
    report.name = "spoof";
    report.seed = seed;
    report.data["config"] = config.to_json();
    report.data["cast"] = {{"suspect", ped.member(suspect).id},
                           {"spoofed_identity", ped.member(deceased).id}};

    // Defense off: spoofed upload lands and misdirects the investigation.
    {
        ojson phase;
        VaultPolicy policy;
        policy.max_profiles_per_account = config.max_profiles_per_account;
        Vault vault(world.panel, policy, world.registry, world.oracle);
        AccountOutcome attacker = vault.create_account({"Spoof Uploader", "spoof@attacker.example"});
        Rng rng = Rng::substream(seed, "spoof");
        ProfileMetadata stolen = world.identity(deceased);
        ProfileMetadata meta = spoof_metadata(stolen.claimed_name, stolen.claimed_email,
                                              "unknown-lab", "unknown-instrument", kCohortEpoch,
                                              attacker.account_id, rng);
        UploadOutcome up = vault.upload_profile(
            attacker.account_id, Submission::raw(serialize_canonical(suspect_profile, meta)));
        Investigation inv = investigate(suspect_profile, vault, ped, world.identity_to_member,
                                        config.detector, config.investigator_tolerance,
                                        config.investigator_top_k, "investigator");
        phase["upload"] = to_string(up.status);
        phase["investigation"] = investigation_json(inv);
        phase["top_candidate"] =
            inv.ranking.empty() ? "" : inv.ranking.front().member_id;
        phase["top_candidate_is_spoofed_identity"] =
            !inv.ranking.empty() && inv.ranking.front().member_id == ped.member(deceased).id;

        // Privileged re-test: compare the stored genotype with ground truth.
        const StoredProfile& stored = vault.profiles().at(up.profile_id);
        MatchResult vs_claimed = match_pair("stored", stored.profile, "claimed",
                                            world.genotype(deceased), *world.panel,
                                            config.detector);
        MatchResult vs_suspect = match_pair("stored", stored.profile, "suspect",
                                            suspect_profile, *world.panel, config.detector);
        phase["retest_vs_claimed_identity"] = to_string(vs_claimed.predicted);
        phase["retest_vs_suspect"] = to_string(vs_suspect.predicted);
        phase["retest_exposes_spoof"] =
            vs_suspect.predicted == RelationshipDegree::Identical &&
            vs_claimed.predicted != RelationshipDegree::Identical;
        report.data["defense_off"] = phase;
    }

    // Defense on: unsigned spoof is rejected, and resigning someone else's
    // identity onto authentically signed bytes breaks the signature.
    {
        ojson phase;
        VaultPolicy policy;
        policy.require_signature = true;
        policy.max_profiles_per_account = config.max_profiles_per_account;
        Vault vault(world.panel, policy, world.registry, world.oracle);
        AccountOutcome attacker = vault.create_account({"Spoof Uploader", "spoof@attacker.example"});
        Rng rng = Rng::substream(seed, "spoof");
        ProfileMetadata stolen = world.identity(deceased);
        ProfileMetadata meta = spoof_metadata(stolen.claimed_name, stolen.claimed_email,
                                              "unknown-lab", "unknown-instrument", kCohortEpoch,
                                              attacker.account_id, rng);
        UploadOutcome up = vault.upload_profile(
            attacker.account_id, Submission::raw(serialize_canonical(suspect_profile, meta)));
        phase["unsigned_upload"] = to_string(up.status);

        // Identity-bound metadata: swap the claimed identity inside an
        // authentic signed profile and keep its signature.
        ProfileMetadata own = world.identity(suspect);
        own.account_id = attacker.account_id;
        SignedProfile authentic = sign_profile(suspect_profile, own, world.lab_key);
        ProfileMetadata tampered = own;
        tampered.claimed_name = stolen.claimed_name;
        tampered.claimed_email = stolen.claimed_email;
        SignedProfile resealed = authentic;
        resealed.canonical_bytes = serialize_canonical(suspect_profile, tampered);
        UploadOutcome up2 = vault.upload_profile(attacker.account_id,
                                                 Submission::signed_profile(resealed));
        phase["identity_swapped_signed_upload"] = to_string(up2.status);
        phase["identity_swapped_reason"] = up2.reason;
        report.data["defense_on"] = phase;
    }
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// Insider: privileged deletion, call modification, and audit rewriting, with
// the detection story (match change, signature re-check, chain verification).
inline ScenarioReport run_scenario_insider(const ScenarioConfig& config, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    World world = build_world(config, seed);
    const Pedigree& ped = world.pedigree();
    const std::uint32_t suspect = first_member_at_generation(ped, 3);
    auto cousin = find_relative_at_rank(ped, suspect, 5);
    auto first_cousin = find_relative_at_rank(ped, suspect, 3);
    if (!cousin || !first_cousin) throw Error("config lacks the relatives this scenario needs");
    GenotypeProfile suspect_profile = world.genotype(suspect);

    VaultPolicy policy;
    policy.require_signature = true;
    policy.max_profiles_per_account = config.max_profiles_per_account;
    Vault vault(world.panel, policy, world.registry, world.oracle);
    upload_cohort_member(vault, world, *cousin);
    upload_cohort_member(vault, world, *first_cousin);

    auto ids_of = [](const std::vector<MatchResult>& rs) {
        std::vector<std::string> out;
        for (const auto& r : rs) out.push_back(r.other_id);
        return out;
    };
    auto before = vault.query_matches(suspect_profile, config.detector, 25, "investigator");
    const bool chain_ok_before = !vault.verify_audit_chain().has_value();

    // 1. Delete the closest real match.
    const std::string deleted_id = ped.member(*first_cousin).id;
    vault.tamper_delete_profile(deleted_id);
    auto after_delete = vault.query_matches(suspect_profile, config.detector, 25, "investigator");
    bool deleted_absent = true;
    for (const auto& r : after_delete)
        if (r.other_id == deleted_id) deleted_absent = false;

    // 2. Modify stored calls of the remaining relative.
    const std::string modified_id = ped.member(*cousin).id;
    Rng rng = Rng::substream(seed, "insider:modify");
    std::vector<std::pair<std::uint32_t, GenotypeCall>> edits;
    for (int k = 0; k < 64; ++k) {
        auto idx = static_cast<std::uint32_t>(rng.below(world.panel->size()));
        edits.emplace_back(idx, static_cast<GenotypeCall>(rng.below(3)));
    }
    vault.tamper_modify_profile(modified_id, edits);
    std::string modified_verdict = "missing";
    for (const auto& [id, verdict] : vault.recheck_signatures())
        if (id == modified_id) modified_verdict = to_string(verdict.status);

    // 3. Rewrite an audit entry in place.
    const std::size_t rewrite_index = vault.audit().size() / 2;
    vault.tamper_rewrite_audit(rewrite_index, Vault::AuditField::Actor, "ghost");
    auto chain = vault.verify_audit_chain();

    ScenarioReport report;
    report.name = "insider";
    report.seed = seed;
    report.data["config"] = config.to_json();
    report.data["cast"] = {{"suspect", ped.member(suspect).id},
                           {"deleted_profile", deleted_id},
                           {"modified_profile", modified_id}};
    report.data["matches_before"] = ids_of(before);
    report.data["matches_after_delete"] = ids_of(after_delete);
    report.data["deleted_match_absent"] = deleted_absent;
    report.data["modified_signature_recheck"] = modified_verdict;
    report.data["audit_chain_ok_before"] = chain_ok_before;
    report.data["audit_rewrite_index"] = rewrite_index;
    report.data["audit_chain_failure_index"] =
        chain ? ojson(*chain) : ojson(nullptr);
    report.data["audit_failure_at_or_adjacent"] =
        chain && (*chain == rewrite_index || *chain == rewrite_index + 1);
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

inline ScenarioReport run_scenario(const std::string& name, const ScenarioConfig& config,
                                   std::uint64_t seed) {
    if (name == "misdirection") return run_scenario_misdirection(config, seed);
    if (name == "false-implication" || name == "false_implication")
        return run_scenario_false_implication(config, seed);
    if (name == "dos") return run_scenario_dos(config, seed);
    if (name == "spoof") return run_scenario_spoof(config, seed);
    if (name == "insider") return run_scenario_insider(config, seed);
    throw Error("unknown scenario: " + name +
                " (expected misdirection, false-implication, dos, spoof, insider)");
}

}  // namespace ibdlab
