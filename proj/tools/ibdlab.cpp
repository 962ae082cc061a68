// ibdlab command-line interface: panel/cohort generation, matching, forgery,
// signing and verification, vault operations, and scenario runs.
//
// Exit codes: 0 success, 1 error, 2 policy rejection / failed verification.

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "ibdlab/attest.hpp"
#include "ibdlab/common.hpp"
#include "ibdlab/forge.hpp"
#include "ibdlab/ibd.hpp"
#include "ibdlab/panel.hpp"
#include "ibdlab/popsim.hpp"
#include "ibdlab/profile.hpp"
#include "ibdlab/scenario.hpp"
#include "ibdlab/vault.hpp"

namespace fs = std::filesystem;
using namespace ibdlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitRejected = 2;

PanelPtr load_panel(const std::string& panel_path, const std::string& freqs_path) {
    if (freqs_path.empty()) {
        return std::make_shared<SnpPanel>(
            SnpPanel::parse_definition(read_text_file(panel_path)));
    }
    SnpPanel bare = SnpPanel::parse_definition(read_text_file(panel_path));
    auto freqs = parse_freqs(read_text_file(freqs_path), bare);
    return std::make_shared<SnpPanel>(
        SnpPanel::parse_definition(read_text_file(panel_path), std::move(freqs)));
}

Bytes read_bytes(const std::string& path) {
    std::string text = read_text_file(path);
    return Bytes(text.begin(), text.end());
}

// .cp files are canonical; anything else is treated as a raw DTC-style export.
GenotypeProfile load_profile(const std::string& path, PanelPtr panel, ProfileMetadata* meta_out) {
    if (path.size() > 3 && path.substr(path.size() - 3) == ".cp") {
        auto [profile, meta] = parse_canonical(read_bytes(path), panel);
        if (meta_out) *meta_out = meta;
        return profile;
    }
    if (meta_out) *meta_out = {};
    return parse_raw_profile(read_text_file(path), panel);
}

void write_bytes(const std::string& path, const Bytes& bytes) {
    write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                           bytes.size()));
}

LabKey load_lab_key(const std::string& path) {
    LabKey key;
    for (const auto& line : split_fields(read_text_file(path), '\n')) {
        if (line.empty()) continue;
        auto f = split_fields(line);
        if (f.size() != 2) throw ParseError("bad key file line");
        if (f[0] == "key_id") key.key_id = f[1];
        else if (f[0] == "scheme_id") key.scheme_id = f[1];
        else if (f[0] == "lab_id") key.lab_id = f[1];
        else if (f[0] == "instrument_pattern") key.instrument_pattern = f[1];
        else if (f[0] == "secret_key") key.secret_key = from_base64(f[1]);
    }
    if (key.key_id.empty() || key.secret_key.empty())
        throw ParseError("key file missing fields");
    return key;
}

void save_lab_key(const std::string& path, const LabKey& key) {
    std::string out;
    out += "key_id\t" + key.key_id + "\n";
    out += "scheme_id\t" + key.scheme_id + "\n";
    out += "lab_id\t" + key.lab_id + "\n";
    out += "instrument_pattern\t" + key.instrument_pattern + "\n";
    out += "secret_key\t" + to_base64(key.secret_key) + "\n";
    write_text_file(path, out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ibdlab: relative-matching attack/defense simulation toolkit"};
    app.require_subcommand(1);

    // ---- panel -------------------------------------------------------------
    auto* cmd_panel = app.add_subcommand("panel", "generate a marker panel");
    struct {
        std::size_t markers = 2000;
        double cm = 160.0;
        std::uint64_t seed = 1;
        std::string out, freqs_out;
    } panel_opts;
    cmd_panel->add_option("--markers-per-chrom", panel_opts.markers);
    cmd_panel->add_option("--cm-per-chrom", panel_opts.cm);
    cmd_panel->add_option("--seed", panel_opts.seed);
    cmd_panel->add_option("--out", panel_opts.out)->required();
    cmd_panel->add_option("--freqs-out", panel_opts.freqs_out);

    // ---- simulate ----------------------------------------------------------
    auto* cmd_sim = app.add_subcommand("simulate", "simulate a cohort and export it");
    struct {
        int generations = 4, children = 2, couples = 1;
        std::size_t markers = 2000;
        double cm = 160.0;
        std::uint64_t seed = 1;
        std::string out;
    } sim_opts;
    cmd_sim->add_option("--generations", sim_opts.generations);
    cmd_sim->add_option("--children-per-couple", sim_opts.children);
    cmd_sim->add_option("--founder-couples", sim_opts.couples);
    cmd_sim->add_option("--markers-per-chrom", sim_opts.markers);
    cmd_sim->add_option("--cm-per-chrom", sim_opts.cm);
    cmd_sim->add_option("--seed", sim_opts.seed);
    cmd_sim->add_option("--out", sim_opts.out)->required();

    // ---- match -------------------------------------------------------------
    auto* cmd_match = app.add_subcommand("match", "query one profile against others");
    struct {
        std::string panel, freqs, query, against, out;
        DetectorParams params;
        std::size_t top_k = 25;
    } match_opts;
    cmd_match->add_option("--panel", match_opts.panel)->required();
    cmd_match->add_option("--freqs", match_opts.freqs);
    cmd_match->add_option("--query", match_opts.query)->required();
    cmd_match->add_option("--against", match_opts.against)
        ->description("directory of .cp files")->required();
    cmd_match->add_option("--min-markers", match_opts.params.min_markers);
    cmd_match->add_option("--min-cm", match_opts.params.min_cm);
    cmd_match->add_option("--max-oh", match_opts.params.max_opposite_homozygotes_per_window);
    cmd_match->add_option("--top-k", match_opts.top_k);
    cmd_match->add_option("--out", match_opts.out);

    // ---- forge -------------------------------------------------------------
    auto* cmd_forge = app.add_subcommand("forge", "construct a synthetic relative");
    struct {
        std::string panel, freqs, target, base, degree = "Degree5", plan_in, plan_out;
        std::string out, raw_out;
        std::string name = "Jane Doe", email = "jane@example.org";
        std::string lab = "unknown-lab", instrument = "unknown-instrument";
        std::string account = "acct-0000";
        std::uint64_t seed = 1;
        double min_cm = 12.0;
    } forge_opts;
    cmd_forge->add_option("--panel", forge_opts.panel)->required();
    cmd_forge->add_option("--freqs", forge_opts.freqs);
    cmd_forge->add_option("--target", forge_opts.target)->required();
    cmd_forge->add_option("--base", forge_opts.base)
        ->description("base profile; omitted = random synthetic base");
    cmd_forge->add_option("--degree", forge_opts.degree);
    cmd_forge->add_option("--plan", forge_opts.plan_in)
        ->description("explicit plan file instead of a sampled plan");
    cmd_forge->add_option("--plan-out", forge_opts.plan_out);
    cmd_forge->add_option("--min-cm", forge_opts.min_cm);
    cmd_forge->add_option("--seed", forge_opts.seed);
    cmd_forge->add_option("--out", forge_opts.out)->description("canonical output path");
    cmd_forge->add_option("--raw-out", forge_opts.raw_out)->description("raw TSV output path");
    cmd_forge->add_option("--spoof-name", forge_opts.name);
    cmd_forge->add_option("--spoof-email", forge_opts.email);
    cmd_forge->add_option("--spoof-lab", forge_opts.lab);
    cmd_forge->add_option("--spoof-instrument", forge_opts.instrument);
    cmd_forge->add_option("--account", forge_opts.account);

    // ---- keygen / sign / verify ---------------------------------------------
    auto* cmd_keygen = app.add_subcommand("keygen", "generate a lab signing key");
    struct {
        std::string lab = "sim-lab", pattern = "array-*";
        std::string valid_from = "2019-01-01T00:00:00Z", valid_to = "2030-01-01T00:00:00Z";
        std::uint64_t seed = 1;
        std::string registry, key_out;
    } keygen_opts;
    cmd_keygen->add_option("--lab", keygen_opts.lab);
    cmd_keygen->add_option("--instrument-pattern", keygen_opts.pattern);
    cmd_keygen->add_option("--valid-from", keygen_opts.valid_from);
    cmd_keygen->add_option("--valid-to", keygen_opts.valid_to);
    cmd_keygen->add_option("--seed", keygen_opts.seed);
    cmd_keygen->add_option("--registry", keygen_opts.registry)
        ->description("registry file to create or append to")->required();
    cmd_keygen->add_option("--key-out", keygen_opts.key_out)->required();

    auto* cmd_sign = app.add_subcommand("sign", "sign a canonical profile");
    struct {
        std::string in, key, out;
    } sign_opts;
    cmd_sign->add_option("--in", sign_opts.in)->required();
    cmd_sign->add_option("--key", sign_opts.key)->required();
    cmd_sign->add_option("--out", sign_opts.out)->description("sidecar path")->required();

    auto* cmd_verify = app.add_subcommand("verify", "verify a signed profile");
    struct {
        std::string in, sig, registry;
    } verify_opts;
    cmd_verify->add_option("--in", verify_opts.in)->required();
    cmd_verify->add_option("--sig", verify_opts.sig)->required();
    cmd_verify->add_option("--registry", verify_opts.registry)->required();

    // ---- vault ---------------------------------------------------------------
    auto* cmd_vault = app.add_subcommand("vault", "simulated database operations");
    cmd_vault->require_subcommand(1);

    auto* vault_init = cmd_vault->add_subcommand("init", "create a vault directory");
    struct {
        std::string dir, panel, registry, identities;
        bool require_signature = false, require_identity = false;
        std::uint32_t cap = 50;
    } vi;
    vault_init->add_option("--dir", vi.dir)->required();
    vault_init->add_option("--panel", vi.panel)->required();
    vault_init->add_option("--registry", vi.registry);
    vault_init->add_option("--identities", vi.identities)
        ->description("known-identity file for the verification oracle");
    vault_init->add_flag("--require-signature", vi.require_signature);
    vault_init->add_flag("--require-identity", vi.require_identity);
    vault_init->add_option("--max-profiles-per-account", vi.cap);

    auto* vault_register = cmd_vault->add_subcommand("register", "create an account");
    struct {
        std::string dir, name, email;
    } vr;
    vault_register->add_option("--dir", vr.dir)->required();
    vault_register->add_option("--name", vr.name)->required();
    vault_register->add_option("--email", vr.email)->required();

    auto* vault_upload = cmd_vault->add_subcommand("upload", "upload a profile");
    struct {
        std::string dir, account, in, sig;
    } vu;
    vault_upload->add_option("--dir", vu.dir)->required();
    vault_upload->add_option("--account", vu.account)->required();
    vault_upload->add_option("--in", vu.in)->required();
    vault_upload->add_option("--sig", vu.sig);

    auto* vault_query = cmd_vault->add_subcommand("query", "run a match query");
    struct {
        std::string dir, profile_id, query, out, actor = "cli";
        std::size_t top_k = 25;
    } vq;
    vault_query->add_option("--dir", vq.dir)->required();
    vault_query->add_option("--profile-id", vq.profile_id);
    vault_query->add_option("--query", vq.query)->description("external .cp/.raw profile");
    vault_query->add_option("--top-k", vq.top_k);
    vault_query->add_option("--out", vq.out);
    vault_query->add_option("--actor", vq.actor);

    auto* vault_audit = cmd_vault->add_subcommand("audit-verify", "verify the audit chain");
    struct {
        std::string dir;
    } va;
    vault_audit->add_option("--dir", va.dir)->required();

    auto* vault_tamper = cmd_vault->add_subcommand("tamper", "privileged tampering");
    struct {
        std::string dir, del, modify, field = "actor", value = "ghost";
        std::int64_t rewrite = -1;
        std::uint64_t seed = 1;
        int edits = 64;
    } vt;
    vault_tamper->add_option("--dir", vt.dir)->required();
    vault_tamper->add_option("--delete", vt.del)->description("profile id to delete");
    vault_tamper->add_option("--modify", vt.modify)->description("profile id to corrupt");
    vault_tamper->add_option("--edits", vt.edits);
    vault_tamper->add_option("--seed", vt.seed);
    vault_tamper->add_option("--rewrite-audit", vt.rewrite)->description("audit index");
    vault_tamper->add_option("--field", vt.field)->description("actor|action|payload");
    vault_tamper->add_option("--value", vt.value);

    // ---- scenario --------------------------------------------------------------
    auto* cmd_scenario = app.add_subcommand("scenario", "run an attack scenario");
    auto* scenario_run = cmd_scenario->add_subcommand("run", "run one scenario");
    struct {
        std::string name, config, out;
        std::uint64_t seed = 1;
    } sc;
    scenario_run->add_option("name", sc.name)
        ->description("misdirection|false-implication|dos|spoof|insider")->required();
    scenario_run->add_option("--config", sc.config);
    scenario_run->add_option("--seed", sc.seed);
    scenario_run->add_option("--out", sc.out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_panel) {
            SnpPanel panel = generate_panel(panel_opts.markers, panel_opts.cm, panel_opts.seed);
            write_text_file(panel_opts.out, panel.definition_text());
            if (!panel_opts.freqs_out.empty())
                write_text_file(panel_opts.freqs_out, render_freqs(panel));
            std::cout << "panel: " << panel.size() << " markers, " << panel.total_cm()
                      << " cM, digest " << panel.digest() << "\n";
            return kExitOk;
        }

        if (*cmd_sim) {
            auto panel = std::make_shared<SnpPanel>(
                generate_panel(sim_opts.markers, sim_opts.cm, sim_opts.seed));
            Pedigree ped = generate_pedigree(
                {sim_opts.generations, sim_opts.children, sim_opts.couples}, sim_opts.seed);
            SimCohort cohort = simulate_genotypes(ped, panel, sim_opts.seed);
            export_cohort(cohort, sim_opts.out);
            std::cout << "cohort: " << ped.size() << " individuals exported to "
                      << sim_opts.out << "\n";
            return kExitOk;
        }

        if (*cmd_match) {
            PanelPtr panel = load_panel(match_opts.panel, match_opts.freqs);
            ProfileMetadata qmeta;
            GenotypeProfile query = load_profile(match_opts.query, panel, &qmeta);
            std::string query_id = qmeta.profile_id.empty() ? "query" : qmeta.profile_id;
            std::vector<std::pair<std::string, GenotypeProfile>> others;
            for (const auto& entry : fs::directory_iterator(match_opts.against)) {
                if (entry.path().extension() != ".cp") continue;
                auto [p, m] = parse_canonical(read_bytes(entry.path().string()), panel);
                others.emplace_back(m.profile_id, std::move(p));
            }
            std::sort(others.begin(), others.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            std::vector<std::pair<std::string, const GenotypeProfile*>> cohort;
            for (const auto& [id, p] : others)
                if (id != query_id) cohort.emplace_back(id, &p);
            auto results = query_all(query_id, query, cohort, *panel, match_opts.params,
                                     match_opts.top_k);
            std::string report =
                render_match_report(query_id, results, *panel, match_opts.params);
            if (match_opts.out.empty())
                std::cout << report;
            else
                write_text_file(match_opts.out, report);
            return kExitOk;
        }

        if (*cmd_forge) {
            PanelPtr panel = load_panel(forge_opts.panel, forge_opts.freqs);
            GenotypeProfile target = load_profile(forge_opts.target, panel, nullptr);
            Rng rng(forge_opts.seed);
            GenotypeProfile base = forge_opts.base.empty()
                                       ? random_profile(panel, rng)
                                       : load_profile(forge_opts.base, panel, nullptr);
            SegmentPlan plan =
                forge_opts.plan_in.empty()
                    ? plan_segments(degree_from_string(forge_opts.degree), *panel, rng,
                                    forge_opts.min_cm)
                    : parse_plan(read_text_file(forge_opts.plan_in), *panel, forge_opts.min_cm);
            ForgedProfile forged = splice(target, base, plan, rng, "target", "base");
            forged.spoofed = spoof_metadata(forge_opts.name, forge_opts.email, forge_opts.lab,
                                            forge_opts.instrument, kCohortEpoch,
                                            forge_opts.account, rng);
            if (!forge_opts.plan_out.empty())
                write_text_file(forge_opts.plan_out, render_plan(plan));
            if (!forge_opts.out.empty())
                write_bytes(forge_opts.out, serialize_canonical(forged.genotype, forged.spoofed));
            if (!forge_opts.raw_out.empty())
                write_text_file(forge_opts.raw_out,
                                render_raw_profile(forged.genotype, "forged profile"));
            std::cout << "forged profile " << forged.spoofed.profile_id << ": "
                      << plan.regions.size() << " regions, " << plan.total_cm()
                      << " planned cM\n";
            return kExitOk;
        }

        if (*cmd_keygen) {
            auto [key, entry] = generate_lab_key(
                keygen_opts.lab, keygen_opts.pattern, parse_rfc3339_utc(keygen_opts.valid_from),
                parse_rfc3339_utc(keygen_opts.valid_to), keygen_opts.seed);
            KeyRegistry registry;
            if (fs::exists(keygen_opts.registry))
                registry = KeyRegistry::parse(read_text_file(keygen_opts.registry));
            registry.add(entry);
            write_text_file(keygen_opts.registry, registry.render());
            save_lab_key(keygen_opts.key_out, key);
            std::cout << "key " << key.key_id << " registered for lab " << key.lab_id << "\n";
            return kExitOk;
        }

        if (*cmd_sign) {
            LabKey key = load_lab_key(sign_opts.key);
            Bytes canonical = read_bytes(sign_opts.in);
            auto meta = peek_canonical_metadata(canonical);
            if (!meta) throw Error("input is not a canonical profile");
            // Re-sign the exact bytes: signature covers the file as-is.
            SignedProfile sp;
            sp.canonical_bytes = canonical;
            sp.key_id = key.key_id;
            sp.scheme_id = key.scheme_id;
            if (meta->source_lab_id != key.lab_id)
                throw Error("metadata lab does not match signing key");
            if (!glob_match(key.instrument_pattern, meta->instrument_id))
                throw Error("metadata instrument does not match signing key");
            sp.signature.resize(crypto_sign_BYTES);
            unsigned long long sig_len = 0;
            crypto_sign_detached(sp.signature.data(), &sig_len, canonical.data(),
                                 canonical.size(),
                                 reinterpret_cast<const unsigned char*>(key.secret_key.data()));
            sp.signature.resize(sig_len);
            write_text_file(sign_opts.out, render_sidecar(sp));
            std::cout << "signed with " << key.key_id << "\n";
            return kExitOk;
        }

        if (*cmd_verify) {
            KeyRegistry registry = KeyRegistry::parse(read_text_file(verify_opts.registry));
            SignedProfile sp =
                parse_sidecar(read_text_file(verify_opts.sig), read_bytes(verify_opts.in));
            Verdict v = verify_profile(sp, registry);
            std::cout << (v.accepted() ? "Accepted" : std::string("Rejected(") +
                                                          to_string(v.status) + ")")
                      << (v.detail.empty() ? "" : " " + v.detail) << "\n";
            return v.accepted() ? kExitOk : kExitRejected;
        }

        if (*vault_init) {
            auto panel = std::make_shared<SnpPanel>(
                SnpPanel::parse_definition(read_text_file(vi.panel)));
            VaultPolicy policy{vi.require_signature, vi.require_identity, vi.cap};
            KeyRegistry registry;
            if (!vi.registry.empty())
                registry = KeyRegistry::parse(read_text_file(vi.registry));
            IdentityOracle oracle;
            if (!vi.identities.empty())
                oracle = IdentityOracle::parse(read_text_file(vi.identities));
            Vault vault(panel, policy, std::move(registry), std::move(oracle));
            vault.save(vi.dir);
            std::cout << "vault initialized at " << vi.dir << "\n";
            return kExitOk;
        }

        if (*vault_register) {
            Vault vault = Vault::load(vr.dir);
            AccountOutcome out = vault.create_account({vr.name, vr.email});
            vault.save(vr.dir);
            if (!out.created()) {
                std::cout << "rejected: " << out.reason << "\n";
                return kExitRejected;
            }
            std::cout << out.account_id << "\n";
            return kExitOk;
        }

        if (*vault_upload) {
            Vault vault = Vault::load(vu.dir);
            Bytes canonical = read_bytes(vu.in);
            Submission sub = vu.sig.empty()
                                 ? Submission::raw(std::move(canonical))
                                 : Submission::signed_profile(parse_sidecar(
                                       read_text_file(vu.sig), std::move(canonical)));
            UploadOutcome out = vault.upload_profile(vu.account, sub);
            vault.save(vu.dir);
            if (!out.stored()) {
                std::cout << "rejected(" << to_string(out.status) << "): " << out.reason << "\n";
                return kExitRejected;
            }
            std::cout << "stored " << out.profile_id << "\n";
            return kExitOk;
        }

        if (*vault_query) {
            Vault vault = Vault::load(vq.dir);
            DetectorParams params;
            std::vector<MatchResult> results;
            std::string query_id;
            if (!vq.profile_id.empty()) {
                query_id = vq.profile_id;
                results = vault.query_matches(vq.profile_id, params, vq.top_k, vq.actor);
            } else if (!vq.query.empty()) {
                ProfileMetadata meta;
                GenotypeProfile q = load_profile(vq.query, vault.panel(), &meta);
                query_id = meta.profile_id.empty() ? "external" : meta.profile_id;
                results = vault.query_matches(q, params, vq.top_k, vq.actor);
            } else {
                throw Error("need --profile-id or --query");
            }
            vault.save(vq.dir);  // the query is audited
            std::string report = render_match_report(query_id, results, *vault.panel(), params);
            if (vq.out.empty())
                std::cout << report;
            else
                write_text_file(vq.out, report);
            return kExitOk;
        }

        if (*vault_audit) {
            Vault vault = Vault::load(va.dir);
            auto bad = vault.verify_audit_chain();
            if (bad) {
                std::cout << "FAIL at index " << *bad << "\n";
                return kExitRejected;
            }
            std::cout << "Ok (" << vault.audit().size() << " entries)\n";
            return kExitOk;
        }

        if (*vault_tamper) {
            Vault vault = Vault::load(vt.dir);
            if (!vt.del.empty()) vault.tamper_delete_profile(vt.del);
            if (!vt.modify.empty()) {
                Rng rng(vt.seed);
                std::vector<std::pair<std::uint32_t, GenotypeCall>> edits;
                for (int k = 0; k < vt.edits; ++k)
                    edits.emplace_back(static_cast<std::uint32_t>(
                                           rng.below(vault.panel()->size())),
                                       static_cast<GenotypeCall>(rng.below(3)));
                vault.tamper_modify_profile(vt.modify, edits);
            }
            if (vt.rewrite >= 0) {
                Vault::AuditField field = Vault::AuditField::Actor;
                if (vt.field == "action") field = Vault::AuditField::Action;
                else if (vt.field == "payload") field = Vault::AuditField::Payload;
                vault.tamper_rewrite_audit(static_cast<std::size_t>(vt.rewrite), field, vt.value);
            }
            vault.save(vt.dir);
            std::cout << "tamper applied\n";
            return kExitOk;
        }

        if (*scenario_run) {
            ScenarioConfig config =
                sc.config.empty() ? ScenarioConfig{} : ScenarioConfig::load(sc.config);
            ScenarioReport report = run_scenario(sc.name, config, sc.seed);
            if (!sc.out.empty()) write_report(report, sc.out);
            std::cout << report.human_text();
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
