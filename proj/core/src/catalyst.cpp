/*
    Copyright (C) 2026 by the SelfServ project contributors

    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include <selfserv/catalyst.hpp>
#include <selfserv/text.hpp>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <tuple>
#include <unordered_set>

namespace selfserv::catalyst {

// Taxonomy -------------------------------------------------------------------

Taxonomy Taxonomy::from_edges(std::span<const std::pair<std::string, std::string>> edges) {
    auto fail = [](const std::string& what) {
        throw CatalystError(CatalystErrc::malformed_taxonomy, what);
    };
    if (edges.empty()) {
        fail("taxonomy has no edges");
    }
    const std::string& root = edges.front().first;
    std::unordered_map<std::string, std::vector<std::string>> children;
    std::unordered_set<std::string> seen_child;
    for (const auto& [parent, child] : edges) {
        if (!text::is_identifier(parent) || !text::is_identifier(child)) {
            fail("invalid node name in edge " + parent + "," + child);
        }
        if (child == root) {
            fail("root '" + root + "' cannot be a child");
        }
        if (!seen_child.insert(child).second) {
            fail("node '" + child + "' has more than one parent");
        }
        children[parent].push_back(child);
    }

    Taxonomy tax;
    // Iterative pre-order walk from the root.
    struct Frame {
        std::string name;
        std::optional<std::size_t> parent;
    };
    std::vector<Frame> stack{{root, std::nullopt}};
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        std::size_t idx = tax.nodes_.size();
        if (!tax.index_.emplace(f.name, idx).second) {
            fail("cycle through '" + f.name + "'");
        }
        tax.nodes_.push_back(Node{f.name, f.parent, {}, idx, 0});
        if (f.parent) {
            tax.nodes_[*f.parent].children.push_back(idx);
        }
        auto it = children.find(f.name);
        if (it != children.end()) {
            for (auto c = it->second.rbegin(); c != it->second.rend(); ++c) {
                stack.push_back({*c, idx});
            }
        }
    }
    if (tax.nodes_.size() != seen_child.size() + 1) {
        for (const auto& child : seen_child) {
            if (!tax.index_.count(child)) {
                fail("node '" + child + "' is not reachable from root '" + root + "'");
            }
        }
        fail("taxonomy is not a single rooted tree");
    }
    // Pre-order indices make every subtree a contiguous interval.
    for (std::size_t i = tax.nodes_.size(); i-- > 0;) {
        auto& n = tax.nodes_[i];
        n.leave = n.children.empty() ? i + 1 : tax.nodes_[n.children.back()].leave;
    }
    return tax;
}

Taxonomy Taxonomy::parse(std::string_view source) {
    std::vector<std::pair<std::string, std::string>> edges;
    auto lines = text::split_lines(source);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto line = text::trim(lines[i]);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto fields = text::split_fields(line);
        if (fields.size() != 2) {
            throw CatalystError(CatalystErrc::malformed_taxonomy,
                                "line " + std::to_string(i + 1) + ": expected parent,child");
        }
        edges.emplace_back(std::string(text::trim(fields[0])), std::string(text::trim(fields[1])));
    }
    return from_edges(edges);
}

Taxonomy Taxonomy::care_default() {
    const std::vector<std::pair<std::string, std::string>> edges{
        {"assistance", "companionship"}, {"companionship", "companion_walk"},
        {"companionship", "companion_chat"}, {"assistance", "monitoring"},
        {"monitoring", "vitals_check"},  {"monitoring", "fall_check"},
        {"assistance", "transport"},     {"assistance", "household"},
    };
    return from_edges(edges);
}

bool Taxonomy::contains(std::string_view node) const {
    return index_.find(std::string(node)) != index_.end();
}

std::size_t Taxonomy::index_of(std::string_view node) const {
    auto it = index_.find(std::string(node));
    if (it == index_.end()) {
        throw CatalystError(CatalystErrc::unknown_capability,
                            "unknown capability '" + std::string(node) + "'");
    }
    return it->second;
}

std::optional<std::string> Taxonomy::parent(std::string_view node) const {
    const auto& n = nodes_[index_of(node)];
    if (!n.parent) {
        return std::nullopt;
    }
    return nodes_[*n.parent].name;
}

bool Taxonomy::is_strict_descendant(std::string_view node, std::string_view ancestor) const {
    auto d = index_of(node);
    const auto& a = nodes_[index_of(ancestor)];
    return d > a.enter && d < a.leave;
}

bool Taxonomy::in_subtree(std::string_view node, std::string_view root) const {
    auto d = index_of(node);
    const auto& a = nodes_[index_of(root)];
    return d >= a.enter && d < a.leave;
}

std::vector<std::string> Taxonomy::ancestors(std::string_view node) const {
    std::vector<std::string> out;
    auto p = nodes_[index_of(node)].parent;
    while (p) {
        out.push_back(nodes_[*p].name);
        p = nodes_[*p].parent;
    }
    return out;
}

std::vector<std::string> Taxonomy::subtree(std::string_view node) const {
    const auto& n = nodes_[index_of(node)];
    std::vector<std::string> out;
    for (std::size_t i = n.enter; i < n.leave; ++i) {
        out.push_back(nodes_[i].name);
    }
    return out;
}

std::vector<std::string> Taxonomy::nodes() const {
    std::vector<std::string> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_) {
        out.push_back(n.name);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> Taxonomy::edges() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& n : nodes_) {
        if (n.parent) {
            out.emplace_back(nodes_[*n.parent].name, n.name);
        }
    }
    return out;
}

// Entries and matching ---------------------------------------------------------

std::string_view to_string(Polarity p) {
    return p == Polarity::provide ? "provide" : "request";
}

double distance(const Location& a, const Location& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

bool overlaps(const TimeWindow& a, const TimeWindow& b) {
    return a.start < b.end && b.start < a.end;
}

void check_entry(const RegistryEntry& e, const Taxonomy& taxonomy) {
    auto invalid = [&](const std::string& what) {
        throw CatalystError(CatalystErrc::invalid_entry, "entry '" + e.entry_id + "': " + what);
    };
    if (!text::is_identifier(e.entry_id)) {
        invalid("invalid entry id");
    }
    if (!text::is_identifier(e.party_id)) {
        invalid("invalid party id '" + e.party_id + "'");
    }
    if (!(e.window.start < e.window.end)) {
        invalid("time window start must precede end");
    }
    if (!std::isfinite(e.location.x) || !std::isfinite(e.location.y)) {
        invalid("location must be finite");
    }
    if (!(e.max_travel >= 0.0) || !std::isfinite(e.max_travel)) {
        invalid("max_travel must be finite and non-negative");
    }
    if (!taxonomy.contains(e.capability)) {
        throw CatalystError(CatalystErrc::unknown_capability,
                            "entry '" + e.entry_id + "': unknown capability '" + e.capability + "'");
    }
}

std::string_view to_string(MatchDegree d) {
    switch (d) {
        case MatchDegree::exact: return "exact";
        case MatchDegree::plugin: return "plugin";
        case MatchDegree::subsumes: return "subsumes";
        case MatchDegree::fail: return "fail";
    }
    return "?";
}

double degree_weight(MatchDegree d) {
    switch (d) {
        case MatchDegree::exact: return 1.0;
        case MatchDegree::plugin: return 0.75;
        case MatchDegree::subsumes: return 0.5;
        case MatchDegree::fail: return 0.0;
    }
    return 0.0;
}

namespace {

bool reachable(const RegistryEntry& provide, const RegistryEntry& request) {
    return overlaps(provide.window, request.window) &&
           distance(provide.location, request.location) <=
               std::min(provide.max_travel, request.max_travel);
}

MatchDegree semantic_degree(const RegistryEntry& provide, const RegistryEntry& request,
                            const Taxonomy& taxonomy) {
    if (provide.capability == request.capability) {
        return MatchDegree::exact;
    }
    if (taxonomy.is_strict_descendant(provide.capability, request.capability)) {
        return MatchDegree::plugin;
    }
    if (taxonomy.is_strict_descendant(request.capability, provide.capability)) {
        return MatchDegree::subsumes;
    }
    return MatchDegree::fail;
}

// True if `candidate` should replace `incumbent` as the leg for its direction.
bool better_leg(const MatchLeg& candidate, const MatchLeg& incumbent) {
    if (candidate.degree != incumbent.degree) {
        return candidate.degree > incumbent.degree;
    }
    return std::tie(candidate.provide_entry, candidate.request_entry) <
           std::tie(incumbent.provide_entry, incumbent.request_entry);
}

}  // namespace

MatchDegree match_degree(const RegistryEntry& provide, const RegistryEntry& request,
                         const Taxonomy& taxonomy) {
    if (provide.polarity != Polarity::provide || request.polarity != Polarity::request) {
        throw CatalystError(CatalystErrc::wrong_polarity,
                            "match_degree expects (provide, request), got (" +
                                std::string(to_string(provide.polarity)) + ", " +
                                std::string(to_string(request.polarity)) + ")");
    }
    if (!reachable(provide, request)) {
        return MatchDegree::fail;
    }
    return semantic_degree(provide, request, taxonomy);
}

std::vector<MatchProposal> find_winwins(std::span<const RegistryEntry> entries,
                                        const Taxonomy& taxonomy) {
    // Index requests by capability so each provide only visits the requests on its
    // ancestor path (exact, plugin) or in its subtree (subsumes).
    std::unordered_map<std::string, std::vector<const RegistryEntry*>> requests_by_capability;
    for (const auto& e : entries) {
        if (e.polarity == Polarity::request) {
            requests_by_capability[e.capability].push_back(&e);
        }
    }

    // Best leg per ordered (provider party, requester party).
    std::map<std::pair<std::string, std::string>, MatchLeg> best;
    for (const auto& provide : entries) {
        if (provide.polarity != Polarity::provide) {
            continue;
        }
        auto consider = [&](const std::string& capability) {
            auto it = requests_by_capability.find(capability);
            if (it == requests_by_capability.end()) {
                return;
            }
            for (const RegistryEntry* request : it->second) {
                if (request->party_id == provide.party_id || !reachable(provide, *request)) {
                    continue;
                }
                MatchLeg leg{provide.entry_id, request->entry_id,
                             semantic_degree(provide, *request, taxonomy)};
                auto [slot, inserted] = best.try_emplace({provide.party_id, request->party_id}, leg);
                if (!inserted && better_leg(leg, slot->second)) {
                    slot->second = std::move(leg);
                }
            }
        };
        for (const auto& node : taxonomy.subtree(provide.capability)) {
            consider(node);
        }
        for (const auto& node : taxonomy.ancestors(provide.capability)) {
            consider(node);
        }
    }

    std::vector<MatchProposal> proposals;
    for (const auto& [parties, leg] : best) {
        const auto& [a, b] = parties;
        if (!(a < b)) {
            continue;
        }
        auto reverse = best.find({b, a});
        if (reverse == best.end()) {
            continue;
        }
        double score = degree_weight(leg.degree) + degree_weight(reverse->second.degree);
        proposals.push_back(MatchProposal{a, b, leg, reverse->second, score});
    }
    std::sort(proposals.begin(), proposals.end(), [](const auto& x, const auto& y) {
        if (x.score != y.score) {
            return x.score > y.score;
        }
        return std::tie(x.party_a, x.party_b) < std::tie(y.party_a, y.party_b);
    });
    return proposals;
}

// Registry ---------------------------------------------------------------------

Registry::Registry(Taxonomy taxonomy) : taxonomy_(std::move(taxonomy)) {}

std::vector<Notification> Registry::publish(RegistryEntry entry) {
    check_entry(entry, taxonomy_);
    std::unique_lock lock(mutex_);
    if (entries_.count(entry.entry_id)) {
        throw CatalystError(CatalystErrc::duplicate_entry,
                            "duplicate entry id '" + entry.entry_id + "'");
    }
    std::vector<Notification> notifications;
    for (const auto& [id, filter] : subscriptions_) {
        if (filter.polarity && *filter.polarity != entry.polarity) {
            continue;
        }
        if (filter.capability && !taxonomy_.in_subtree(entry.capability, *filter.capability)) {
            continue;
        }
        notifications.push_back({id, entry.entry_id});
    }
    auto id = entry.entry_id;
    entries_.emplace(std::move(id), std::move(entry));
    return notifications;
}

SubscriptionId Registry::subscribe(SubscriptionFilter filter) {
    if (filter.capability && !taxonomy_.contains(*filter.capability)) {
        throw CatalystError(CatalystErrc::unknown_capability,
                            "unknown capability '" + *filter.capability + "' in filter");
    }
    std::unique_lock lock(mutex_);
    auto id = next_subscription_++;
    subscriptions_.emplace(id, std::move(filter));
    return id;
}

void Registry::unsubscribe(SubscriptionId id) {
    std::unique_lock lock(mutex_);
    if (subscriptions_.erase(id) == 0) {
        throw CatalystError(CatalystErrc::unknown_subscription,
                            "unknown subscription " + std::to_string(id));
    }
}

std::vector<MatchProposal> Registry::find_winwins() const {
    std::shared_lock lock(mutex_);
    std::vector<RegistryEntry> snapshot;
    snapshot.reserve(entries_.size());
    for (const auto& [id, e] : entries_) {
        snapshot.push_back(e);
    }
    lock.unlock();
    return catalyst::find_winwins(snapshot, taxonomy_);
}

void Registry::accept(const MatchProposal& proposal, std::optional<Timestamp> now) {
    std::unique_lock lock(mutex_);
    const std::string* ids[] = {&proposal.a_to_b.provide_entry, &proposal.a_to_b.request_entry,
                                &proposal.b_to_a.provide_entry, &proposal.b_to_a.request_entry};
    for (const auto* id : ids) {
        auto it = entries_.find(*id);
        if (it == entries_.end()) {
            throw CatalystError(CatalystErrc::stale_proposal,
                                "stale proposal: entry '" + *id + "' no longer published");
        }
        if (now && it->second.window.end < *now) {
            throw CatalystError(CatalystErrc::stale_proposal,
                                "stale proposal: entry '" + *id + "' has expired");
        }
    }
    for (const auto* id : ids) {
        entries_.erase(*id);
    }
}

std::vector<std::string> Registry::expire(Timestamp now) {
    std::unique_lock lock(mutex_);
    std::vector<std::string> removed;
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (it->second.window.end < now) {
            removed.push_back(it->first);
            it = entries_.erase(it);
        } else {
            ++it;
        }
    }
    return removed;
}

std::vector<RegistryEntry> Registry::entries() const {
    std::shared_lock lock(mutex_);
    std::vector<RegistryEntry> out;
    out.reserve(entries_.size());
    for (const auto& [id, e] : entries_) {
        out.push_back(e);
    }
    return out;
}

bool Registry::contains(std::string_view entry_id) const {
    std::shared_lock lock(mutex_);
    return entries_.find(entry_id) != entries_.end();
}

std::size_t Registry::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

// File formats -----------------------------------------------------------------

std::string_view registry_csv_header() {
    return "entry_id,party_id,polarity,capability,window_start,window_end,x,y,max_travel";
}

std::vector<RegistryEntry> parse_registry(std::string_view source, const Taxonomy& taxonomy) {
    std::vector<RegistryEntry> out;
    std::unordered_set<std::string> ids;
    auto lines = text::split_lines(source);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto line = lines[i];
        if (text::trim(line).empty() || line.front() == '#' || line == registry_csv_header()) {
            continue;
        }
        const std::string where = "line " + std::to_string(i + 1) + ": ";
        auto malformed = [&](const std::string& what) {
            throw CatalystError(CatalystErrc::malformed_registry, where + what);
        };
        auto fields = text::split_fields(line);
        if (fields.size() != 9) {
            malformed("expected 9 fields, found " + std::to_string(fields.size()));
        }
        RegistryEntry e;
        e.entry_id = std::string(fields[0]);
        e.party_id = std::string(fields[1]);
        if (fields[2] == "provide") {
            e.polarity = Polarity::provide;
        } else if (fields[2] == "request") {
            e.polarity = Polarity::request;
        } else {
            malformed("unknown polarity '" + std::string(fields[2]) + "'");
        }
        e.capability = std::string(fields[3]);
        auto start = text::parse_int(fields[4]);
        auto end = text::parse_int(fields[5]);
        auto x = text::parse_real(fields[6]);
        auto y = text::parse_real(fields[7]);
        auto travel = text::parse_real(fields[8]);
        if (!start || !end) {
            malformed("malformed time window");
        }
        if (!x || !y) {
            malformed("malformed location");
        }
        if (!travel) {
            malformed("malformed max_travel");
        }
        e.window = {*start, *end};
        e.location = {*x, *y};
        e.max_travel = *travel;
        try {
            check_entry(e, taxonomy);
        } catch (const CatalystError& err) {
            throw CatalystError(err.code(), where + err.what());
        }
        if (!ids.insert(e.entry_id).second) {
            throw CatalystError(CatalystErrc::duplicate_entry,
                                where + "duplicate entry id '" + e.entry_id + "'");
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::string format_registry_line(const RegistryEntry& e) {
    return e.entry_id + "," + e.party_id + "," + std::string(to_string(e.polarity)) + "," +
           e.capability + "," + std::to_string(e.window.start) + "," +
           std::to_string(e.window.end) + "," + text::format_real(e.location.x) + "," +
           text::format_real(e.location.y) + "," + text::format_real(e.max_travel);
}

std::string_view proposal_csv_header() {
    return "partyA,partyB,provideA,requestB,degree1,provideB,requestA,degree2,score";
}

std::string format_proposal_line(const MatchProposal& p) {
    return p.party_a + "," + p.party_b + "," + p.a_to_b.provide_entry + "," +
           p.a_to_b.request_entry + "," + std::string(to_string(p.a_to_b.degree)) + "," +
           p.b_to_a.provide_entry + "," + p.b_to_a.request_entry + "," +
           std::string(to_string(p.b_to_a.degree)) + "," + text::format_real(p.score);
}

}  // namespace selfserv::catalyst
