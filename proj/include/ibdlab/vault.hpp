#pragma once
// Simulated third-party genetic database: accounts, policy-gated uploads,
// match queries, a hash-chained audit log, and the privileged-tamper levers
// the insider scenario needs. All mutations serialize through this object;
// audit sequence numbers are the serialization witness. Timestamps come from
// a virtual clock so identical operation sequences produce identical state.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ibdlab/attest.hpp"
#include "ibdlab/common.hpp"
#include "ibdlab/ibd.hpp"
#include "ibdlab/panel.hpp"
#include "ibdlab/profile.hpp"

namespace ibdlab {

struct VaultPolicy {
    bool require_signature = false;
    bool require_identity_verification = false;
    std::uint32_t max_profiles_per_account = 50;

    void validate() const {
        if (max_profiles_per_account < 1)
            throw Error("max_profiles_per_account must be >= 1");
    }
};

struct Identity {
    std::string name;
    std::string email;
    std::string key() const { return name + "\x1f" + email; }
};

// Pluggable stand-in for real identity verification: a registry of true
// identities (the simulated cohort's) that the predicate checks against.
class IdentityOracle {
public:
    void add(const Identity& id) { known_.insert(id.key()); }
    bool confirms(const Identity& id) const { return known_.count(id.key()) > 0; }
    std::size_t size() const { return known_.size(); }

    std::string render() const {
        std::string out;
        for (const auto& k : known_) {
            std::string line = k;
            std::size_t sep = line.find('\x1f');
            line[sep] = '\t';
            out += line + "\n";
        }
        return out;
    }

    static IdentityOracle parse(std::string_view text) {
        IdentityOracle o;
        std::size_t start = 0, line_no = 0;
        while (start < text.size()) {
            std::size_t nl = text.find('\n', start);
            std::string_view line = text.substr(start, nl == std::string_view::npos
                                                           ? std::string_view::npos
                                                           : nl - start);
            start = (nl == std::string_view::npos) ? text.size() : nl + 1;
            ++line_no;
            if (line.empty()) continue;
            auto f = split_fields(line);
            if (f.size() != 2) throw ParseError("identity line needs 2 fields", line_no);
            o.add({f[0], f[1]});
        }
        return o;
    }

private:
    std::set<std::string> known_;
};

struct Account {
    std::string account_id;
    Identity identity;
    bool verified = false;
};

// ---------------------------------------------------------------------------
// Hash-chained audit log. entry_hash = SHA-256 over the tab-joined fields
// (seq, timestamp, actor, action, payload_hex, prev_hex); entry 0 links to a
// genesis prev_hash of 32 zero bytes. The file serialization *is* the hashed
// byte layout, so re-verification needs nothing but the file.

constexpr const char* kAuditGenesis =
    "0000000000000000000000000000000000000000000000000000000000000000";

struct AuditEntry {
    std::uint64_t seq = 0;
    std::int64_t ts = 0;
    std::string actor;
    std::string action;  // create_account | upload | query | delete | modify | revoke
    std::string payload_hex;
    std::string prev_hex;
    std::string entry_hex;

    std::string hash_input() const {
        return std::to_string(seq) + "\t" + rfc3339_utc(ts) + "\t" + actor + "\t" + action +
               "\t" + payload_hex + "\t" + prev_hex;
    }
};

class AuditLog {
public:
    const std::vector<AuditEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    const AuditEntry& append(std::int64_t ts, const std::string& actor,
                             const std::string& action, const std::string& payload_hex) {
        AuditEntry e;
        e.seq = entries_.size();
        e.ts = ts;
        e.actor = actor;
        e.action = action;
        e.payload_hex = payload_hex;
        e.prev_hex = entries_.empty() ? kAuditGenesis : entries_.back().entry_hex;
        e.entry_hex = sha256_hex(e.hash_input());
        entries_.push_back(std::move(e));
        return entries_.back();
    }

    // First index whose entry fails re-verification; nullopt when the whole
    // chain checks out (an empty log is vacuously Ok).
    std::optional<std::size_t> verify() const {
        for (std::size_t k = 0; k < entries_.size(); ++k) {
            const AuditEntry& e = entries_[k];
            if (e.seq != k) return k;
            const std::string& expected_prev =
                k == 0 ? kAuditGenesis : entries_[k - 1].entry_hex;
            if (e.prev_hex != expected_prev) return k;
            if (e.entry_hex != sha256_hex(e.hash_input())) return k;
        }
        return std::nullopt;
    }

    // Direct mutable access for the insider model only.
    AuditEntry& entry_for_tamper(std::size_t k) {
        if (k >= entries_.size()) throw Error("audit index out of range");
        return entries_[k];
    }

    std::string render() const {
        std::string out;
        for (const AuditEntry& e : entries_) {
            out += e.hash_input();
            out += '\t';
            out += e.entry_hex;
            out += '\n';
        }
        return out;
    }

    static AuditLog parse(std::string_view text) {
        AuditLog log;
        std::size_t start = 0, line_no = 0;
        while (start < text.size()) {
            std::size_t nl = text.find('\n', start);
            std::string_view line = text.substr(start, nl == std::string_view::npos
                                                           ? std::string_view::npos
                                                           : nl - start);
            start = (nl == std::string_view::npos) ? text.size() : nl + 1;
            ++line_no;
            if (line.empty()) continue;
            auto f = split_fields(line);
            if (f.size() != 7) throw ParseError("audit line needs 7 fields", line_no);
            AuditEntry e;
            e.seq = static_cast<std::uint64_t>(parse_int(f[0], line_no));
            e.ts = parse_rfc3339_utc(f[1]);
            e.actor = f[2];
            e.action = f[3];
            e.payload_hex = f[4];
            e.prev_hex = f[5];
            e.entry_hex = f[6];
            log.entries_.push_back(std::move(e));
        }
        return log;
    }

private:
    std::vector<AuditEntry> entries_;
};

// ---------------------------------------------------------------------------
// Vault proper

enum class UploadStatus : std::uint8_t {
    Stored,
    SignatureRejected,
    CapExceeded,
    DuplicateProfile,
    UnknownAccount,
    Malformed,
};

inline const char* to_string(UploadStatus s) {
    switch (s) {
        case UploadStatus::Stored: return "stored";
        case UploadStatus::SignatureRejected: return "signature_rejected";
        case UploadStatus::CapExceeded: return "cap_exceeded";
        case UploadStatus::DuplicateProfile: return "duplicate_profile";
        case UploadStatus::UnknownAccount: return "unknown_account";
        default: return "malformed";
    }
}

struct UploadOutcome {
    UploadStatus status = UploadStatus::Malformed;
    std::string profile_id;
    std::string reason;
    bool stored() const { return status == UploadStatus::Stored; }
};

enum class AccountStatus : std::uint8_t { Created, VerificationFailed, DuplicateIdentity };

struct AccountOutcome {
    AccountStatus status = AccountStatus::VerificationFailed;
    std::string account_id;
    std::string reason;
    bool created() const { return status == AccountStatus::Created; }
};

struct StoredProfile {
    std::string profile_id;
    std::string account_id;
    Bytes canonical;
    ProfileMetadata meta;
    GenotypeProfile profile;
    std::optional<SignedProfile> signature;
};

// A submission is canonical bytes, optionally accompanied by a signature.
struct Submission {
    Bytes canonical;
    std::optional<SignedProfile> signature;

    static Submission raw(Bytes canonical_bytes) { return {std::move(canonical_bytes), {}}; }
    static Submission signed_profile(SignedProfile sp) {
        Submission s;
        s.canonical = sp.canonical_bytes;
        s.signature = std::move(sp);
        return s;
    }
};

constexpr std::int64_t kVaultEpoch = 1609459200;  // 2021-01-01T00:00:00Z

class Vault {
public:
    Vault(PanelPtr panel, VaultPolicy policy, KeyRegistry registry, IdentityOracle oracle)
        : panel_(std::move(panel)), policy_(policy), registry_(std::move(registry)),
          oracle_(std::move(oracle)) {
        policy_.validate();
    }

    const VaultPolicy& policy() const { return policy_; }
    const PanelPtr& panel() const { return panel_; }
    const KeyRegistry& registry() const { return registry_; }
    const AuditLog& audit() const { return audit_; }
    const std::map<std::string, Account>& accounts() const { return accounts_; }
    const std::map<std::string, StoredProfile>& profiles() const { return profiles_; }

    bool has_profile(const std::string& id) const { return profiles_.count(id) > 0; }

    AccountOutcome create_account(const Identity& identity) {
        AccountOutcome out;
        if (policy_.require_identity_verification && !oracle_.confirms(identity)) {
            out.status = AccountStatus::VerificationFailed;
            out.reason = "identity could not be verified";
            log("anonymous", "create_account",
                "create_account\t" + identity.key() + "\trejected:verification");
            return out;
        }
        const bool verified = oracle_.confirms(identity);
        if (policy_.require_identity_verification &&
            verified_identities_.count(identity.key())) {
            out.status = AccountStatus::DuplicateIdentity;
            out.reason = "verified identity already owns an account";
            log("anonymous", "create_account",
                "create_account\t" + identity.key() + "\trejected:duplicate");
            return out;
        }
        char buf[16];
        std::snprintf(buf, sizeof buf, "acct-%04llu",
                      static_cast<unsigned long long>(account_serial_++));
        Account acct{buf, identity, verified};
        accounts_.emplace(acct.account_id, acct);
        if (verified) verified_identities_.insert(identity.key());
        out.status = AccountStatus::Created;
        out.account_id = acct.account_id;
        log(acct.account_id, "create_account",
            "create_account\t" + identity.key() + "\tcreated");
        return out;
    }

    UploadOutcome upload_profile(const std::string& account_id, const Submission& sub) {
        UploadOutcome out;
        auto acct = accounts_.find(account_id);
        if (acct == accounts_.end()) {
            out.status = UploadStatus::UnknownAccount;
            out.reason = "no such account";
            log("anonymous", "upload", "upload\t?\trejected:unknown_account");
            return out;
        }
        // The submission must parse against the vault panel no matter the
        // policy; unparseable uploads cannot participate in matching.
        GenotypeProfile profile;
        ProfileMetadata meta;
        try {
            auto parsed = parse_canonical(sub.canonical, panel_);
            profile = std::move(parsed.first);
            meta = std::move(parsed.second);
        } catch (const ParseError& e) {
            out.status = UploadStatus::Malformed;
            out.reason = e.what();
            log(account_id, "upload", "upload\t?\trejected:malformed");
            return out;
        }
        out.profile_id = meta.profile_id;
        if (policy_.require_signature) {
            if (!sub.signature) {
                out.status = UploadStatus::SignatureRejected;
                out.reason = "unsigned upload";
                log(account_id, "upload",
                    upload_payload(meta.profile_id, sub.canonical, "rejected:unsigned"));
                return out;
            }
            Verdict v = verify_profile(*sub.signature, registry_);
            if (!v.accepted()) {
                out.status = UploadStatus::SignatureRejected;
                out.reason = std::string(to_string(v.status)) +
                             (v.detail.empty() ? "" : ": " + v.detail);
                log(account_id, "upload",
                    upload_payload(meta.profile_id, sub.canonical,
                                   std::string("rejected:") + to_string(v.status)));
                return out;
            }
        }
        if (profiles_.count(meta.profile_id)) {
            out.status = UploadStatus::DuplicateProfile;
            out.reason = "profile_id already stored";
            log(account_id, "upload",
                upload_payload(meta.profile_id, sub.canonical, "rejected:duplicate"));
            return out;
        }
        std::size_t owned = 0;
        for (const auto& [id, sp] : profiles_)
            if (sp.account_id == account_id) ++owned;
        if (owned >= policy_.max_profiles_per_account) {
            out.status = UploadStatus::CapExceeded;
            out.reason = "per-account profile cap reached";
            log(account_id, "upload",
                upload_payload(meta.profile_id, sub.canonical, "rejected:cap"));
            return out;
        }
        StoredProfile sp;
        sp.profile_id = meta.profile_id;
        sp.account_id = account_id;
        sp.canonical = sub.canonical;
        sp.meta = std::move(meta);
        sp.profile = std::move(profile);
        sp.signature = sub.signature;
        log(account_id, "upload", upload_payload(sp.profile_id, sub.canonical, "stored"));
        profiles_.emplace(sp.profile_id, std::move(sp));
        out.status = UploadStatus::Stored;
        return out;
    }

    // Query by stored profile id; the queried profile is not its own match.
    std::vector<MatchResult> query_matches(const std::string& profile_id,
                                           const DetectorParams& params, std::size_t top_k,
                                           const std::string& actor) {
        auto it = profiles_.find(profile_id);
        if (it == profiles_.end()) throw Error("unknown profile_id: " + profile_id);
        auto results = run_query(profile_id, it->second.profile, params, top_k, &profile_id);
        log_query(actor, "stored:" + profile_id, results);
        return results;
    }

    // Query with an external profile (the investigator's route).
    std::vector<MatchResult> query_matches(const GenotypeProfile& query,
                                           const DetectorParams& params, std::size_t top_k,
                                           const std::string& actor) {
        if (!query.panel->same_panel(*panel_))
            throw Error("query profile is not on the vault panel");
        auto results = run_query("query", query, params, top_k, nullptr);
        log_query(actor, "external", results);
        return results;
    }

    // -- privileged access (the harness's model of compromise) --------------
    // These bypass every policy gate and deliberately leave no well-formed
    // audit trail.

    void tamper_delete_profile(const std::string& profile_id) {
        if (!profiles_.erase(profile_id)) throw Error("unknown profile_id: " + profile_id);
    }

    void tamper_modify_profile(const std::string& profile_id,
                               const std::vector<std::pair<std::uint32_t, GenotypeCall>>& edits) {
        auto it = profiles_.find(profile_id);
        if (it == profiles_.end()) throw Error("unknown profile_id: " + profile_id);
        StoredProfile& sp = it->second;
        for (auto [idx, call] : edits) {
            if (idx >= sp.profile.size()) throw Error("marker index out of range");
            sp.profile.calls.set(idx, call);
        }
        // A careful insider regenerates the canonical bytes so the internal
        // checksum still passes; the detached signature cannot be fixed up.
        sp.canonical = serialize_canonical(sp.profile, sp.meta);
        if (sp.signature) sp.signature->canonical_bytes = sp.canonical;
    }

    enum class AuditField { Actor, Action, Payload };
    void tamper_rewrite_audit(std::size_t index, AuditField field, const std::string& value) {
        AuditEntry& e = audit_.entry_for_tamper(index);
        switch (field) {
            case AuditField::Actor: e.actor = value; break;
            case AuditField::Action: e.action = value; break;
            case AuditField::Payload: e.payload_hex = value; break;
        }
    }

    std::optional<std::size_t> verify_audit_chain() const { return audit_.verify(); }

    // Re-verify every stored signature against the registry (policy
    // soundness check; catches insider call edits).
    std::vector<std::pair<std::string, Verdict>> recheck_signatures() const {
        std::vector<std::pair<std::string, Verdict>> out;
        for (const auto& [id, sp] : profiles_)
            if (sp.signature) out.emplace_back(id, verify_profile(*sp.signature, registry_));
        return out;
    }

    // Audited key revocation (a legitimate admin action, unlike tampering).
    void revoke_key(const std::string& key_id) {
        registry_.revoke(key_id);
        log("admin", "revoke", "revoke\t" + key_id);
    }

    // -- persistence ---------------------------------------------------------
    // Layout: panel.tsv, profiles/<id>.cp, signatures/<id>.sig, accounts.tsv,
    // audit.log, plus policy.tsv / registry.tsv / identities.tsv so a vault
    // directory is self-contained.

    void save(const std::filesystem::path& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir / "profiles");
        fs::create_directories(dir / "signatures");
        write_text_file((dir / "panel.tsv").string(), panel_->definition_text());
        std::string pol;
        pol += "require_signature\t" + std::string(policy_.require_signature ? "1" : "0") + "\n";
        pol += "require_identity_verification\t" +
               std::string(policy_.require_identity_verification ? "1" : "0") + "\n";
        pol += "max_profiles_per_account\t" +
               std::to_string(policy_.max_profiles_per_account) + "\n";
        write_text_file((dir / "policy.tsv").string(), pol);
        write_text_file((dir / "registry.tsv").string(), registry_.render());
        write_text_file((dir / "identities.tsv").string(), oracle_.render());
        std::string accounts;
        for (const auto& [id, a] : accounts_)
            accounts += id + "\t" + a.identity.name + "\t" + a.identity.email + "\t" +
                        (a.verified ? "1" : "0") + "\n";
        write_text_file((dir / "accounts.tsv").string(), accounts);
        std::string uploads;
        for (const auto& [id, sp] : profiles_) uploads += id + "\t" + sp.account_id + "\n";
        write_text_file((dir / "uploads.tsv").string(), uploads);
        write_text_file((dir / "audit.log").string(), audit_.render());

        // Remove files for profiles that no longer exist (tamper deletes).
        for (const auto& entry : fs::directory_iterator(dir / "profiles")) {
            std::string stem = entry.path().stem().string();
            if (!profiles_.count(stem)) fs::remove(entry.path());
        }
        for (const auto& entry : fs::directory_iterator(dir / "signatures")) {
            std::string stem = entry.path().stem().string();
            if (!profiles_.count(stem)) fs::remove(entry.path());
        }
        for (const auto& [id, sp] : profiles_) {
            write_text_file((dir / "profiles" / (id + ".cp")).string(),
                            std::string_view(reinterpret_cast<const char*>(sp.canonical.data()),
                                             sp.canonical.size()));
            if (sp.signature)
                write_text_file((dir / "signatures" / (id + ".sig")).string(),
                                render_sidecar(*sp.signature));
        }
    }

    static Vault load(const std::filesystem::path& dir) {
        namespace fs = std::filesystem;
        auto panel = std::make_shared<SnpPanel>(
            SnpPanel::parse_definition(read_text_file((dir / "panel.tsv").string())));
        VaultPolicy policy;
        for (const auto& line : split_fields(read_text_file((dir / "policy.tsv").string()), '\n')) {
            if (line.empty()) continue;
            auto f = split_fields(line);
            if (f.size() != 2) throw ParseError("bad policy line");
            if (f[0] == "require_signature") policy.require_signature = f[1] == "1";
            else if (f[0] == "require_identity_verification")
                policy.require_identity_verification = f[1] == "1";
            else if (f[0] == "max_profiles_per_account")
                policy.max_profiles_per_account =
                    static_cast<std::uint32_t>(parse_int(f[1]));
        }
        KeyRegistry registry = KeyRegistry::parse(read_text_file((dir / "registry.tsv").string()));
        IdentityOracle oracle = IdentityOracle::parse(read_text_file((dir / "identities.tsv").string()));
        Vault v(panel, policy, std::move(registry), std::move(oracle));
        for (const auto& line : split_fields(read_text_file((dir / "accounts.tsv").string()), '\n')) {
            if (line.empty()) continue;
            auto f = split_fields(line);
            if (f.size() != 4) throw ParseError("bad accounts line");
            Account a{f[0], {f[1], f[2]}, f[3] == "1"};
            if (a.verified) v.verified_identities_.insert(a.identity.key());
            v.accounts_.emplace(a.account_id, a);
            // Keep the serial ahead of every loaded id.
            if (f[0].size() > 5) {
                std::uint64_t n = static_cast<std::uint64_t>(parse_int(f[0].substr(5)));
                if (n >= v.account_serial_) v.account_serial_ = n + 1;
            }
        }
        v.audit_ = AuditLog::parse(read_text_file((dir / "audit.log").string()));
        v.clock_ = kVaultEpoch + static_cast<std::int64_t>(v.audit_.size());
        std::map<std::string, std::string> uploader;
        for (const auto& line : split_fields(read_text_file((dir / "uploads.tsv").string()), '\n')) {
            if (line.empty()) continue;
            auto f = split_fields(line);
            if (f.size() != 2) throw ParseError("bad uploads line");
            uploader[f[0]] = f[1];
        }
        if (fs::exists(dir / "profiles"))
            for (const auto& entry : fs::directory_iterator(dir / "profiles")) {
                std::string text = read_text_file(entry.path().string());
                Bytes bytes(text.begin(), text.end());
                auto [profile, meta] = parse_canonical(bytes, panel);
                StoredProfile sp;
                sp.profile_id = meta.profile_id;
                sp.canonical = std::move(bytes);
                sp.meta = std::move(meta);
                sp.profile = std::move(profile);
                fs::path sig = dir / "signatures" / (sp.profile_id + ".sig");
                if (fs::exists(sig))
                    sp.signature =
                        parse_sidecar(read_text_file(sig.string()), sp.canonical, true);
                auto up = uploader.find(sp.profile_id);
                sp.account_id = up == uploader.end() ? sp.meta.account_id : up->second;
                v.profiles_.emplace(sp.profile_id, std::move(sp));
            }
        return v;
    }

private:
    void log(const std::string& actor, const std::string& action, const std::string& payload) {
        audit_.append(clock_++, actor, action, sha256_hex(payload));
    }

    static std::string upload_payload(const std::string& profile_id, const Bytes& canonical,
                                      const std::string& outcome) {
        return "upload\t" + profile_id + "\t" + outcome + "\t" + sha256_hex(canonical);
    }

    std::vector<MatchResult> run_query(const std::string& query_id,
                                       const GenotypeProfile& query,
                                       const DetectorParams& params, std::size_t top_k,
                                       const std::string* exclude) {
        std::vector<std::pair<std::string, const GenotypeProfile*>> cohort;
        cohort.reserve(profiles_.size());
        for (const auto& [id, sp] : profiles_) {
            if (exclude && id == *exclude) continue;
            cohort.emplace_back(id, &sp.profile);
        }
        return query_all(query_id, query, cohort, *panel_, params, top_k);
    }

    void log_query(const std::string& actor, const std::string& source,
                   const std::vector<MatchResult>& results) {
        std::string payload = "query\t" + source + "\t" + std::to_string(results.size());
        for (const auto& r : results) payload += "\t" + r.other_id;
        log(actor, "query", payload);
    }

    PanelPtr panel_;
    VaultPolicy policy_;
    KeyRegistry registry_;
    IdentityOracle oracle_;
    std::map<std::string, Account> accounts_;
    std::map<std::string, StoredProfile> profiles_;
    std::set<std::string> verified_identities_;
    AuditLog audit_;
    std::int64_t clock_ = kVaultEpoch;
    std::uint64_t account_serial_ = 0;
};

}  // namespace ibdlab
