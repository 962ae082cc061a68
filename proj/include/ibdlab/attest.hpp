#pragma once
// Lab/instrument attestation: Ed25519 detached signatures over canonical
// profile bytes, a key registry with validity windows and revocation, and the
// verification gate the vault's signature policy delegates to.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <sodium.h>

#include "ibdlab/common.hpp"
#include "ibdlab/profile.hpp"
#include "ibdlab/rng.hpp"

namespace ibdlab {

constexpr const char* kSchemeEd25519 = "ed25519";

// `*` matches any run of characters; everything else is literal.
inline bool glob_match(std::string_view pattern, std::string_view text) {
    if (pattern.empty()) return text.empty();
    if (pattern[0] == '*') {
        for (std::size_t i = 0; i <= text.size(); ++i)
            if (glob_match(pattern.substr(1), text.substr(i))) return true;
        return false;
    }
    return !text.empty() && pattern[0] == text[0] &&
           glob_match(pattern.substr(1), text.substr(1));
}

struct RegistryEntry {
    std::string key_id;
    std::string scheme_id;
    std::string lab_id;
    std::string instrument_pattern;
    std::int64_t valid_from = 0;
    std::int64_t valid_to = 0;
    bool revoked = false;
    Bytes public_key;
};

// Private half held by the lab/instrument. The attack harness never gets one.
struct LabKey {
    std::string key_id;
    std::string scheme_id;
    std::string lab_id;
    std::string instrument_pattern;
    Bytes secret_key;
};

class KeyRegistry {
public:
    void add(RegistryEntry entry) {
        if (entries_.count(entry.key_id))
            throw Error("duplicate key_id: " + entry.key_id);
        entries_.emplace(entry.key_id, std::move(entry));
    }

    const RegistryEntry* find(const std::string& key_id) const {
        auto it = entries_.find(key_id);
        return it == entries_.end() ? nullptr : &it->second;
    }

    void revoke(const std::string& key_id) {
        auto it = entries_.find(key_id);
        if (it == entries_.end()) throw Error("unknown key_id: " + key_id);
        it->second.revoked = true;
    }

    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, RegistryEntry>& entries() const { return entries_; }

    // One entry per line: key_id, scheme_id, lab_id, instrument_pattern,
    // valid_from, valid_to, revoked, base64 public key.
    std::string render() const {
        std::string out;
        for (const auto& [id, e] : entries_) {
            out += e.key_id;
            out += '\t';
            out += e.scheme_id;
            out += '\t';
            out += e.lab_id;
            out += '\t';
            out += e.instrument_pattern;
            out += '\t';
            out += rfc3339_utc(e.valid_from);
            out += '\t';
            out += rfc3339_utc(e.valid_to);
            out += '\t';
            out += e.revoked ? '1' : '0';
            out += '\t';
            out += to_base64(e.public_key);
            out += '\n';
        }
        return out;
    }

    static KeyRegistry parse(std::string_view text) {
        KeyRegistry reg;
        std::size_t line_no = 0, start = 0;
        while (start < text.size()) {
            std::size_t nl = text.find('\n', start);
            std::string_view line = text.substr(start, nl == std::string_view::npos
                                                           ? std::string_view::npos
                                                           : nl - start);
            start = (nl == std::string_view::npos) ? text.size() : nl + 1;
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            auto f = split_fields(line);
            if (f.size() != 8) throw ParseError("registry line needs 8 fields", line_no);
            RegistryEntry e;
            e.key_id = f[0];
            e.scheme_id = f[1];
            e.lab_id = f[2];
            e.instrument_pattern = f[3];
            e.valid_from = parse_rfc3339_utc(f[4]);
            e.valid_to = parse_rfc3339_utc(f[5]);
            e.revoked = f[6] == "1";
            e.public_key = from_base64(f[7]);
            reg.add(std::move(e));
        }
        return reg;
    }

private:
    std::map<std::string, RegistryEntry> entries_;
};

// Deterministic per seed so tests and scenario runs reproduce; distinct seeds
// give independent keys.
inline std::pair<LabKey, RegistryEntry> generate_lab_key(const std::string& lab_id,
                                                         const std::string& instrument_pattern,
                                                         std::int64_t valid_from,
                                                         std::int64_t valid_to,
                                                         std::uint64_t seed) {
    if (lab_id.empty()) throw Error("lab_id must not be empty");
    ensure_sodium();
    Rng rng = Rng::substream(seed, "keygen:" + lab_id + ":" + instrument_pattern);
    unsigned char kseed[crypto_sign_SEEDBYTES];
    for (std::size_t i = 0; i < sizeof kseed; i += 8) {
        std::uint64_t w = rng.next_u64();
        for (std::size_t j = 0; j < 8 && i + j < sizeof kseed; ++j)
            kseed[i + j] = static_cast<unsigned char>(w >> (8 * j));
    }
    unsigned char pk[crypto_sign_PUBLICKEYBYTES], sk[crypto_sign_SECRETKEYBYTES];
    crypto_sign_seed_keypair(pk, sk, kseed);

    RegistryEntry entry;
    entry.public_key.assign(pk, pk + sizeof pk);
    entry.key_id = "k" + to_hex(sha256(entry.public_key)).substr(0, 16);
    entry.scheme_id = kSchemeEd25519;
    entry.lab_id = lab_id;
    entry.instrument_pattern = instrument_pattern;
    entry.valid_from = valid_from;
    entry.valid_to = valid_to;

    LabKey key;
    key.key_id = entry.key_id;
    key.scheme_id = kSchemeEd25519;
    key.lab_id = lab_id;
    key.instrument_pattern = instrument_pattern;
    key.secret_key.assign(sk, sk + sizeof sk);
    return {std::move(key), std::move(entry)};
}

// Signature over exactly the canonical bytes of (profile, metadata). An
// instrument refuses to attest data claiming another lab or instrument, or
// with no generation time.
inline SignedProfile sign_profile(const GenotypeProfile& profile,
                                  const ProfileMetadata& meta, const LabKey& key) {
    if (meta.source_lab_id != key.lab_id)
        throw Error("metadata lab does not match signing key");
    if (!glob_match(key.instrument_pattern, meta.instrument_id))
        throw Error("metadata instrument does not match signing key");
    if (meta.generated_at == 0) throw Error("metadata generated_at not set");
    ensure_sodium();
    SignedProfile sp;
    sp.canonical_bytes = serialize_canonical(profile, meta);
    sp.signature.resize(crypto_sign_BYTES);
    unsigned long long sig_len = 0;
    crypto_sign_detached(sp.signature.data(), &sig_len, sp.canonical_bytes.data(),
                         sp.canonical_bytes.size(),
                         reinterpret_cast<const unsigned char*>(key.secret_key.data()));
    sp.signature.resize(sig_len);
    sp.key_id = key.key_id;
    sp.scheme_id = key.scheme_id;
    return sp;
}

enum class VerifyStatus : std::uint8_t {
    Accepted,
    UnknownKey,
    Revoked,
    Expired,
    BadSignature,
    Malformed,
};

inline const char* to_string(VerifyStatus s) {
    switch (s) {
        case VerifyStatus::Accepted: return "accepted";
        case VerifyStatus::UnknownKey: return "unknown_key";
        case VerifyStatus::Revoked: return "revoked";
        case VerifyStatus::Expired: return "expired";
        case VerifyStatus::BadSignature: return "bad_signature";
        default: return "malformed";
    }
}

struct Verdict {
    VerifyStatus status = VerifyStatus::Malformed;
    std::string detail;
    bool accepted() const { return status == VerifyStatus::Accepted; }
};

inline Verdict verify_profile(const SignedProfile& sp, const KeyRegistry& registry) {
    ensure_sodium();
    if (sp.canonical_bytes.empty())
        return {VerifyStatus::Malformed, "empty canonical bytes"};
    if (sp.signature.size() != crypto_sign_BYTES)
        return {VerifyStatus::Malformed, "signature is not " +
                                             std::to_string(crypto_sign_BYTES) + " bytes"};
    if (sp.scheme_id != kSchemeEd25519)
        return {VerifyStatus::Malformed, "unknown scheme: " + sp.scheme_id};
    auto meta = peek_canonical_metadata(sp.canonical_bytes);
    if (!meta) return {VerifyStatus::Malformed, "canonical header unparseable"};
    const RegistryEntry* entry = registry.find(sp.key_id);
    if (!entry) return {VerifyStatus::UnknownKey, "key " + sp.key_id + " not registered"};
    if (entry->scheme_id != sp.scheme_id)
        return {VerifyStatus::Malformed, "scheme does not match registry entry"};
    if (entry->revoked) return {VerifyStatus::Revoked, "key " + sp.key_id + " revoked"};
    if (meta->generated_at < entry->valid_from || meta->generated_at > entry->valid_to)
        return {VerifyStatus::Expired, "generated_at outside key validity window"};
    if (crypto_sign_verify_detached(
            sp.signature.data(), sp.canonical_bytes.data(), sp.canonical_bytes.size(),
            reinterpret_cast<const unsigned char*>(entry->public_key.data())) != 0)
        return {VerifyStatus::BadSignature, "signature does not verify"};
    return {VerifyStatus::Accepted, ""};
}

// ---------------------------------------------------------------------------
// Signature sidecar: key_id, scheme_id, base64 signature, hex SHA-256 of the
// canonical bytes it signs.

inline std::string render_sidecar(const SignedProfile& sp) {
    std::string out;
    out += "key_id\t" + sp.key_id + "\n";
    out += "scheme_id\t" + sp.scheme_id + "\n";
    out += "signature\t" + to_base64(sp.signature) + "\n";
    out += "sha256\t" + sha256_hex(sp.canonical_bytes) + "\n";
    return out;
}

// Reassembles a SignedProfile from canonical bytes plus a sidecar. With
// require_digest_match the recorded SHA-256 must match the presented bytes
// (used when loading trusted storage); otherwise the mismatch is left for
// signature verification to flag, which is the authoritative check.
inline SignedProfile parse_sidecar(std::string_view text, Bytes canonical_bytes,
                                   bool require_digest_match = false) {
    SignedProfile sp;
    sp.canonical_bytes = std::move(canonical_bytes);
    std::string digest;
    std::size_t line_no = 0, start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos
                                                       ? std::string_view::npos
                                                       : nl - start);
        start = (nl == std::string_view::npos) ? text.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError("malformed sidecar line", line_no);
        std::string key(line.substr(0, tab)), value(line.substr(tab + 1));
        if (key == "key_id") sp.key_id = value;
        else if (key == "scheme_id") sp.scheme_id = value;
        else if (key == "signature") sp.signature = from_base64(value);
        else if (key == "sha256") digest = value;
        else throw ParseError("unknown sidecar field: " + key, line_no);
    }
    if (sp.key_id.empty() || sp.scheme_id.empty() || sp.signature.empty() || digest.empty())
        throw ParseError("sidecar missing required fields");
    if (require_digest_match && digest != sha256_hex(sp.canonical_bytes))
        throw ParseError("sidecar digest does not match canonical bytes");
    return sp;
}

}  // namespace ibdlab
