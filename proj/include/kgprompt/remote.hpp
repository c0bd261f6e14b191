#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgprompt/graph.hpp"

namespace kgprompt {

struct RemoteEndpoint {
  std::string sparql_url = "https://query.wikidata.org/sparql";
  std::string entity_api_url = "https://www.wikidata.org/w/api.php";
  std::string user_agent = "kgprompt/0.1 (research tooling)";
  std::chrono::milliseconds timeout{30'000};
  std::size_t max_retries = 3;
  std::chrono::milliseconds backoff{1'000};
  /// Minimum spacing between two requests issued by one client.
  std::chrono::milliseconds politeness_delay{250};
  /// When non-empty, only these property ids (e.g. "P2176") become edges.
  std::vector<std::string> property_allowlist;

  /// Throws InvalidArgument for malformed URLs or a zero timeout.
  void validate() const;
};

/// Applies KGPROMPT_SPARQL_URL / KGPROMPT_ENTITY_API_URL when set.
RemoteEndpoint with_env_overrides(RemoteEndpoint endpoint);

enum class CachePolicy { read_write, read_only, bypass };

std::string_view to_string(CachePolicy p);
CachePolicy cache_policy_from_string(std::string_view s);

/// On-disk response cache. Entries live at root/<h[0..2]>/<h>.json where h
/// is the sha256 of the whitespace-collapsed query text. Entries are never
/// overwritten; concurrent writers race on an atomic rename.
class QueryCache {
 public:
  QueryCache(std::filesystem::path root, CachePolicy policy);

  const std::filesystem::path& root() const { return root_; }
  CachePolicy policy() const { return policy_; }

  static std::string canonical(std::string_view query);
  static std::string key(std::string_view query);
  std::filesystem::path entry_path(std::string_view query) const;

  /// Cached response body, or nullopt (always nullopt under bypass).
  std::optional<std::string> get(std::string_view query) const;
  /// Stores only under read_write and only if no entry exists yet.
  void put(std::string_view query, const std::string& response) const;

 private:
  std::filesystem::path root_;
  CachePolicy policy_;
};

struct EntityCandidate {
  NodeId id;
  std::string label;
  std::string description;

  bool operator==(const EntityCandidate&) const = default;
};

struct RemoteNeighbor {
  Node node;
  RelationLabel label;
  /// Property id the label came from, e.g. "P2176".
  std::string property;
  Direction direction = Direction::out;

  bool operator==(const RemoteNeighbor&) const = default;
};

/// Loads a bundled SPARQL template ("one_hop_out", "one_hop_in",
/// "label_lookup") with the entity id filled in.
std::string render_query(std::string_view template_name, const NodeId& entity);

bool is_remote_entity_id(std::string_view id);

/// Sequential client: one request at a time with a politeness delay. Every
/// response passes through the cache before it is parsed.
class RemoteClient {
 public:
  RemoteClient(RemoteEndpoint endpoint, QueryCache cache);

  const RemoteEndpoint& endpoint() const { return endpoint_; }
  const QueryCache& cache() const { return cache_; }
  /// Requests that actually hit the network.
  std::size_t network_requests() const { return network_requests_; }

  /// Ranked search results; empty when nothing matches.
  std::vector<EntityCandidate> resolve_entity(std::string_view name);

  /// English label of an entity. Throws UnknownEntity if it does not exist.
  std::string entity_label(const NodeId& x);

  /// Entity-valued 1-hop statements in both directions, sorted by numeric
  /// property id, then neighbor id, then direction (out first).
  std::vector<RemoteNeighbor> fetch_neighbors(const NodeId& x);

  std::string sparql(const std::string& query);

 private:
  std::string get_entity_api(const std::string& query_string);
  void pace();

  RemoteEndpoint endpoint_;
  QueryCache cache_;
  std::size_t network_requests_ = 0;
  std::optional<std::chrono::steady_clock::time_point> last_request_;
};

std::vector<EntityCandidate> resolve_entity(const RemoteEndpoint& endpoint, const QueryCache& cache,
                                            std::string_view name);
std::vector<RemoteNeighbor> fetch_neighbors_remote(const RemoteEndpoint& endpoint, const QueryCache& cache,
                                                   const NodeId& x);

/// Star subgraph around each seed entity: the seeds, their 1-hop
/// neighbors and the connecting edges.
KnowledgeGraph build_remote_subgraph(RemoteClient& client, const std::vector<NodeId>& seeds);

}  // namespace kgprompt
