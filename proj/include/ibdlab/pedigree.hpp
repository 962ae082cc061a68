#pragma once
// Family DAG: founders (no parents) and non-founders (both parents in an
// earlier generation). Kinship coefficients computed on the DAG give the
// expected shared-DNA fraction used to rank true relationships.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ibdlab/common.hpp"

namespace ibdlab {

constexpr std::uint32_t kNoParent = std::numeric_limits<std::uint32_t>::max();

struct PedigreeMember {
    std::string id;
    std::uint32_t mother = kNoParent;
    std::uint32_t father = kNoParent;
    int generation = 0;

    bool is_founder() const { return mother == kNoParent && father == kNoParent; }
};

class Pedigree {
public:
    Pedigree() = default;
    explicit Pedigree(std::vector<PedigreeMember> members) : members_(std::move(members)) {
        for (std::uint32_t i = 0; i < members_.size(); ++i)
            index_.emplace(members_[i].id, i);
        validate();
    }

    std::size_t size() const { return members_.size(); }
    const PedigreeMember& member(std::uint32_t i) const { return members_[i]; }
    const std::vector<PedigreeMember>& members() const { return members_; }

    static constexpr std::uint32_t npos = kNoParent;
    std::uint32_t find(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? npos : it->second;
    }

    void validate() const {
        if (members_.empty()) throw Error("pedigree has no members");
        if (index_.size() != members_.size()) throw Error("duplicate individual id");
        for (const auto& m : members_) {
            const bool has_mother = m.mother != kNoParent;
            const bool has_father = m.father != kNoParent;
            if (has_mother != has_father)
                throw Error("individual " + m.id + " has exactly one parent");
            if (!has_mother) continue;
            if (m.mother >= members_.size() || m.father >= members_.size())
                throw Error("parent index out of range for " + m.id);
            if (members_[m.mother].generation >= m.generation ||
                members_[m.father].generation >= m.generation)
                throw Error("parent not in an earlier generation than " + m.id);
        }
        // Generation monotonicity on every edge already rules out cycles.
    }

    // Kinship coefficient psi(i, j): probability a random allele drawn from i
    // is identical by descent to one drawn from j. psi(i, i) = 1/2 with no
    // inbreeding. Memoized; the cache is keyed on the unordered pair.
    double kinship(std::uint32_t i, std::uint32_t j) const {
        if (i > j) std::swap(i, j);
        auto key = std::make_pair(i, j);
        auto it = kinship_cache_.find(key);
        if (it != kinship_cache_.end()) return it->second;
        double v;
        if (i == j) {
            v = 0.5;  // no inbreeding: founders' spouses are always new founders
        } else {
            // Recurse through the member of the pair in the later generation.
            std::uint32_t a = i, b = j;
            if (members_[a].generation < members_[b].generation) std::swap(a, b);
            const PedigreeMember& ma = members_[a];
            if (ma.is_founder()) {
                // Same-generation founders, or a founder paired with someone
                // no later than it: unrelated unless identical.
                const PedigreeMember& mb = members_[b];
                if (mb.is_founder()) {
                    v = 0.0;
                } else {
                    v = 0.5 * (kinship(mb.mother, a) + kinship(mb.father, a));
                }
            } else {
                v = 0.5 * (kinship(ma.mother, b) + kinship(ma.father, b));
            }
        }
        kinship_cache_.emplace(key, v);
        return v;
    }

    // Genealogical degree rank from expected shared fraction 2*psi:
    // 0 = self, 1 = parent/child or full sibling, 2 = grandparent/avuncular,
    // 3 = 1st cousin, 5 = 2nd cousin, 7 = 3rd cousin; kUnrelatedRank when no
    // common ancestor exists.
    static constexpr int kUnrelatedRank = 1000;
    int relationship_rank(std::uint32_t i, std::uint32_t j) const {
        if (i == j) return 0;
        double shared = 2.0 * kinship(i, j);
        if (shared <= 0.0) return kUnrelatedRank;
        double r = -std::log2(shared);
        int k = static_cast<int>(std::lround(r));
        return k < 1 ? 1 : k;
    }

    std::vector<std::uint32_t> founders() const {
        std::vector<std::uint32_t> out;
        for (std::uint32_t i = 0; i < members_.size(); ++i)
            if (members_[i].is_founder()) out.push_back(i);
        return out;
    }

    bool is_ancestor_of(std::uint32_t anc, std::uint32_t desc) const {
        if (anc == desc) return false;
        const PedigreeMember& m = members_[desc];
        if (m.is_founder()) return false;
        if (m.mother == anc || m.father == anc) return true;
        return is_ancestor_of(anc, m.mother) || is_ancestor_of(anc, m.father);
    }

    // individual_id<TAB>mother_id<TAB>father_id<TAB>generation, `.` for none.
    std::string render() const {
        std::string out;
        for (const auto& m : members_) {
            out += m.id;
            out += '\t';
            out += m.mother == kNoParent ? "." : members_[m.mother].id;
            out += '\t';
            out += m.father == kNoParent ? "." : members_[m.father].id;
            out += '\t';
            out += std::to_string(m.generation);
            out += '\n';
        }
        return out;
    }

    static Pedigree parse(std::string_view text) {
        struct Row { std::string id, mother, father; int gen; };
        std::vector<Row> rows;
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
            if (f.size() != 4) throw ParseError("pedigree line needs 4 fields", line_no);
            rows.push_back({f[0], f[1], f[2], static_cast<int>(parse_int(f[3], line_no))});
        }
        std::unordered_map<std::string, std::uint32_t> idx;
        for (std::uint32_t i = 0; i < rows.size(); ++i) idx.emplace(rows[i].id, i);
        std::vector<PedigreeMember> members;
        members.reserve(rows.size());
        auto resolve = [&](const std::string& s, std::size_t ln) -> std::uint32_t {
            if (s == ".") return kNoParent;
            auto it = idx.find(s);
            if (it == idx.end()) throw ParseError("unknown parent id: " + s, ln);
            return it->second;
        };
        for (std::uint32_t i = 0; i < rows.size(); ++i)
            members.push_back({rows[i].id, resolve(rows[i].mother, i + 1),
                               resolve(rows[i].father, i + 1), rows[i].gen});
        return Pedigree(std::move(members));
    }

private:
    std::vector<PedigreeMember> members_;
    std::unordered_map<std::string, std::uint32_t> index_;
    mutable std::map<std::pair<std::uint32_t, std::uint32_t>, double> kinship_cache_;
};

}  // namespace ibdlab
