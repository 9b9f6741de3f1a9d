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

#pragma once

#include <selfserv/events.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

/**
 * The Catalyst: a registry of published Provides and Requests with
 * publish/subscribe notification and discovery of mutual (win-win) matches.
 *
 * Capabilities are nodes of a rooted taxonomy. A provide matches a request with
 * degree exact (same node), plugin (provide is a strict descendant of the request)
 * or subsumes (provide is a strict ancestor of the request), provided their time
 * windows overlap and the parties are within min(max_travel) of each other.
 */
namespace selfserv::catalyst {

enum class CatalystErrc {
    duplicate_entry,
    unknown_capability,
    invalid_entry,
    wrong_polarity,
    stale_proposal,
    unknown_subscription,
    malformed_taxonomy,
    malformed_registry,
};

class CatalystError : public std::runtime_error {
public:
    CatalystError(CatalystErrc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    CatalystErrc code() const noexcept { return code_; }

private:
    CatalystErrc code_;
};

/// Rooted tree of capability concepts with unique node names.
class Taxonomy {
public:
    /// Builds from (parent, child) edges; the first edge's parent is the root.
    /// Throws CatalystError(malformed_taxonomy) on cycles, repeated children,
    /// unreachable nodes or an empty edge list.
    static Taxonomy from_edges(std::span<const std::pair<std::string, std::string>> edges);

    /// Parses the `parent,child` per-line file format ('#' comments, blank lines ok).
    static Taxonomy parse(std::string_view text);

    /// assistance -> {companionship {companion_walk, companion_chat},
    ///                monitoring {vitals_check, fall_check}, transport, household}
    static Taxonomy care_default();

    const std::string& root() const { return nodes_.front().name; }
    bool contains(std::string_view node) const;
    std::size_t size() const noexcept { return nodes_.size(); }

    /// nullopt for the root. Throws CatalystError for unknown nodes.
    std::optional<std::string> parent(std::string_view node) const;

    /// True iff `node` lies strictly below `ancestor`.
    bool is_strict_descendant(std::string_view node, std::string_view ancestor) const;

    /// True iff `node` equals `root` or lies below it.
    bool in_subtree(std::string_view node, std::string_view root) const;

    /// Strict ancestors of `node`, nearest first.
    std::vector<std::string> ancestors(std::string_view node) const;

    /// `node` and all of its descendants in pre-order.
    std::vector<std::string> subtree(std::string_view node) const;

    /// Nodes in pre-order from the root.
    std::vector<std::string> nodes() const;

    /// Canonical edge list in pre-order, suitable for from_edges.
    std::vector<std::pair<std::string, std::string>> edges() const;

private:
    struct Node {
        std::string name;
        std::optional<std::size_t> parent;
        std::vector<std::size_t> children;
        std::size_t enter{0};  // pre-order interval [enter, leave)
        std::size_t leave{0};
    };

    std::size_t index_of(std::string_view node) const;

    std::vector<Node> nodes_;  // pre-order
    std::unordered_map<std::string, std::size_t> index_;
};

enum class Polarity : std::uint8_t { provide, request };

std::string_view to_string(Polarity p);

struct Location {
    double x{0.0};
    double y{0.0};
    bool operator==(const Location&) const = default;
};

double distance(const Location& a, const Location& b);

struct TimeWindow {
    Timestamp start{0};
    Timestamp end{0};
    bool operator==(const TimeWindow&) const = default;
};

/// Half-open windows [start, end) overlap iff each starts before the other ends.
bool overlaps(const TimeWindow& a, const TimeWindow& b);

/// A published Provide or Request.
struct RegistryEntry {
    std::string entry_id;
    std::string party_id;
    Polarity polarity{Polarity::provide};
    std::string capability;
    TimeWindow window;
    Location location;
    double max_travel{0.0};
    std::string note;

    bool operator==(const RegistryEntry&) const = default;
};

/// Throws CatalystError(invalid_entry / unknown_capability) if the entry breaks an invariant.
void check_entry(const RegistryEntry& entry, const Taxonomy& taxonomy);

/// Ordered: fail < subsumes < plugin < exact.
enum class MatchDegree : std::uint8_t { fail, subsumes, plugin, exact };

std::string_view to_string(MatchDegree d);

/// exact 1.0, plugin 0.75, subsumes 0.5, fail 0.
double degree_weight(MatchDegree d);

/// Throws CatalystError(wrong_polarity) if the arguments are not (provide, request).
MatchDegree match_degree(const RegistryEntry& provide, const RegistryEntry& request,
                         const Taxonomy& taxonomy);

/// One direction of a win-win: a provide satisfying the other party's request.
struct MatchLeg {
    std::string provide_entry;
    std::string request_entry;
    MatchDegree degree{MatchDegree::fail};
    bool operator==(const MatchLeg&) const = default;
};

/// A mutual match between party_a < party_b. `a_to_b` uses A's provide and B's
/// request; `b_to_a` the reverse.
struct MatchProposal {
    std::string party_a;
    std::string party_b;
    MatchLeg a_to_b;
    MatchLeg b_to_a;
    double score{0.0};
    bool operator==(const MatchProposal&) const = default;
};

/// All pairwise win-wins over `entries`, one per party pair. Within a direction the
/// highest-degree leg wins, ties going to the smallest (provide_entry, request_entry).
/// Sorted by descending score, then ascending (party_a, party_b).
std::vector<MatchProposal> find_winwins(std::span<const RegistryEntry> entries,
                                        const Taxonomy& taxonomy);

struct SubscriptionFilter {
    std::optional<Polarity> polarity;
    std::optional<std::string> capability;  // matches the node and its whole subtree
};

using SubscriptionId = std::uint64_t;

struct Notification {
    SubscriptionId subscription{0};
    std::string entry_id;
    bool operator==(const Notification&) const = default;
};

/**
 * Single logical authority for published entries. Mutations (publish, accept,
 * expire, subscribe) are serialized; find_winwins and snapshots may run
 * concurrently and see a consistent state.
 */
class Registry {
public:
    explicit Registry(Taxonomy taxonomy);

    /// Stores the entry and returns one notification per matching subscription, in
    /// subscription order. Throws CatalystError with the registry unchanged on a
    /// duplicate id, unknown capability or invalid entry.
    std::vector<Notification> publish(RegistryEntry entry);

    /// Throws CatalystError(unknown_capability) for a filter on an unknown node.
    SubscriptionId subscribe(SubscriptionFilter filter);
    void unsubscribe(SubscriptionId id);

    std::vector<MatchProposal> find_winwins() const;

    /// Consumes the four entries of `proposal`. With `now`, entries whose window
    /// ended before `now` count as expired. Throws CatalystError(stale_proposal),
    /// leaving the registry unchanged, if any entry is gone or expired.
    void accept(const MatchProposal& proposal, std::optional<Timestamp> now = std::nullopt);

    /// Removes and returns (sorted) the ids of entries whose window ended before `now`.
    std::vector<std::string> expire(Timestamp now);

    /// Entries ordered by entry_id.
    std::vector<RegistryEntry> entries() const;
    bool contains(std::string_view entry_id) const;
    std::size_t size() const;

    const Taxonomy& taxonomy() const noexcept { return taxonomy_; }

private:
    Taxonomy taxonomy_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, RegistryEntry, std::less<>> entries_;
    std::map<SubscriptionId, SubscriptionFilter> subscriptions_;
    SubscriptionId next_subscription_{1};
};

// File formats ---------------------------------------------------------------

/// `entry_id,party_id,polarity,capability,window_start,window_end,x,y,max_travel`.
/// Skips blank lines, '#' comments and a header row. Errors name the 1-based line.
std::vector<RegistryEntry> parse_registry(std::string_view text, const Taxonomy& taxonomy);

std::string format_registry_line(const RegistryEntry& entry);
std::string_view registry_csv_header();

std::string_view proposal_csv_header();
/// `partyA,partyB,provideA,requestB,degree1,provideB,requestA,degree2,score`
std::string format_proposal_line(const MatchProposal& proposal);

}  // namespace selfserv::catalyst
