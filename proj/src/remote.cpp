#include "kgprompt/remote.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>
#include <regex>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "http_retry.hpp"
#include "kgprompt/error.hpp"
#include "kgprompt/util.hpp"

namespace kgprompt {
namespace detail {
extern const std::string_view kOneHopOutQuery;
extern const std::string_view kOneHopInQuery;
extern const std::string_view kLabelLookupQuery;
}  // namespace detail

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kEntityPrefix = "http://www.wikidata.org/entity/";

std::string percent_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json parse_body(const std::string& body, const std::string& what) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedResponse, what + ": " + e.what());
  }
}

const json& sparql_bindings(const json& doc, const std::string& what) {
  if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_object() ||
      !doc["results"].contains("bindings") || !doc["results"]["bindings"].is_array()) {
    throw Error(ErrorCode::MalformedResponse, what + ": no results.bindings array");
  }
  return doc["results"]["bindings"];
}

std::optional<std::string> binding_value(const json& row, const char* var) {
  if (!row.contains(var)) return std::nullopt;
  const auto& cell = row[var];
  if (!cell.is_object() || !cell.contains("value") || !cell["value"].is_string()) {
    throw Error(ErrorCode::MalformedResponse, std::string("binding '") + var + "' lacks a string value");
  }
  return cell["value"].get<std::string>();
}

std::optional<std::string> strip_entity_prefix(const std::string& uri) {
  if (uri.compare(0, kEntityPrefix.size(), kEntityPrefix) != 0) return std::nullopt;
  return uri.substr(kEntityPrefix.size());
}

std::uint64_t numeric_part(std::string_view id) {
  std::uint64_t v = 0;
  for (std::size_t i = 1; i < id.size(); ++i) v = v * 10 + static_cast<std::uint64_t>(id[i] - '0');
  return v;
}

bool is_property_id(std::string_view id) {
  return id.size() > 1 && id[0] == 'P' &&
         std::all_of(id.begin() + 1, id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

void RemoteEndpoint::validate() const {
  detail::split_url(sparql_url);
  detail::split_url(entity_api_url);
  if (timeout.count() <= 0) throw Error(ErrorCode::InvalidArgument, "remote timeout must be positive");
  for (const auto& p : property_allowlist) {
    if (!is_property_id(p)) throw Error(ErrorCode::InvalidArgument, "not a property id: '" + p + "'");
  }
}

RemoteEndpoint with_env_overrides(RemoteEndpoint endpoint) {
  if (const char* v = std::getenv("KGPROMPT_SPARQL_URL"); v && *v) endpoint.sparql_url = v;
  if (const char* v = std::getenv("KGPROMPT_ENTITY_API_URL"); v && *v) endpoint.entity_api_url = v;
  return endpoint;
}

std::string_view to_string(CachePolicy p) {
  switch (p) {
    case CachePolicy::read_write: return "read_write";
    case CachePolicy::read_only: return "read_only";
    case CachePolicy::bypass: return "bypass";
  }
  return "?";
}

CachePolicy cache_policy_from_string(std::string_view s) {
  if (s == "read_write") return CachePolicy::read_write;
  if (s == "read_only") return CachePolicy::read_only;
  if (s == "bypass") return CachePolicy::bypass;
  throw Error(ErrorCode::InvalidArgument, "unknown cache policy '" + std::string(s) + "'");
}

QueryCache::QueryCache(std::filesystem::path root, CachePolicy policy) : root_(std::move(root)), policy_(policy) {}

std::string QueryCache::canonical(std::string_view query) {
  auto words = split_whitespace(query);
  std::string out;
  for (auto w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string QueryCache::key(std::string_view query) { return sha256_hex(canonical(query)); }

std::filesystem::path QueryCache::entry_path(std::string_view query) const {
  auto h = key(query);
  return root_ / h.substr(0, 2) / (h + ".json");
}

std::optional<std::string> QueryCache::get(std::string_view query) const {
  if (policy_ == CachePolicy::bypass) return std::nullopt;
  auto path = entry_path(query);
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("response") || !doc["response"].is_string()) {
    throw Error(ErrorCode::MalformedResponse, "corrupt cache entry " + path.string());
  }
  if (doc.value("query", "") != canonical(query)) {
    throw Error(ErrorCode::MalformedResponse, "cache entry " + path.string() + " holds a different query");
  }
  return doc["response"].get<std::string>();
}

void QueryCache::put(std::string_view query, const std::string& response) const {
  if (policy_ != CachePolicy::read_write) return;
  auto path = entry_path(query);
  if (std::filesystem::exists(path)) return;
  std::filesystem::create_directories(path.parent_path());
  ordered_json doc;
  doc["query"] = canonical(query);
  doc["fetched_at"] = utc_now();
  doc["response"] = response;

  thread_local std::mt19937_64 rng{std::random_device{}()};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(rng());
  {
    std::ofstream out(tmp, std::ios::binary);
    out << doc.dump(2) << '\n';
    if (!out.flush()) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  // A hard link fails if another writer got there first; that entry wins.
  std::error_code ec;
  std::filesystem::create_hard_link(tmp, path, ec);
  std::filesystem::remove(tmp);
  if (ec && ec != std::errc::file_exists) {
    throw Error(ErrorCode::IoError, "cannot store cache entry " + path.string() + ": " + ec.message());
  }
}

std::string render_query(std::string_view template_name, const NodeId& entity) {
  if (!is_remote_entity_id(entity.value)) {
    throw Error(ErrorCode::InvalidArgument, "not a remote entity id: '" + entity.value + "'");
  }
  std::string_view tpl;
  if (template_name == "one_hop_out") tpl = detail::kOneHopOutQuery;
  else if (template_name == "one_hop_in") tpl = detail::kOneHopInQuery;
  else if (template_name == "label_lookup") tpl = detail::kLabelLookupQuery;
  else throw Error(ErrorCode::InvalidArgument, "unknown query template '" + std::string(template_name) + "'");
  std::string out(tpl);
  constexpr std::string_view placeholder = "{{ENTITY}}";
  for (auto pos = out.find(placeholder); pos != std::string::npos; pos = out.find(placeholder, pos)) {
    out.replace(pos, placeholder.size(), entity.value);
    pos += entity.value.size();
  }
  return out;
}

bool is_remote_entity_id(std::string_view id) {
  static const std::regex pattern("^Q[1-9][0-9]*$");
  return std::regex_match(id.begin(), id.end(), pattern);
}

RemoteClient::RemoteClient(RemoteEndpoint endpoint, QueryCache cache)
    : endpoint_(std::move(endpoint)), cache_(std::move(cache)) {
  endpoint_.validate();
}

void RemoteClient::pace() {
  if (last_request_) {
    auto ready = *last_request_ + endpoint_.politeness_delay;
    std::this_thread::sleep_until(ready);
  }
  last_request_ = std::chrono::steady_clock::now();
  ++network_requests_;
}

std::string RemoteClient::sparql(const std::string& query) {
  if (auto hit = cache_.get(query)) return *hit;
  if (cache_.policy() == CachePolicy::read_only) {
    throw Error(ErrorCode::CacheMiss, "query not cached (" + QueryCache::key(query) + ")");
  }
  auto url = detail::split_url(endpoint_.sparql_url);
  auto client = detail::make_client(url.origin, endpoint_.timeout);
  httplib::Headers headers{{"Accept", "application/sparql-results+json"}, {"User-Agent", endpoint_.user_agent}};
  const std::string body = "query=" + percent_encode(query);
  const std::string path = url.path.empty() ? "/" : url.path;
  auto response = detail::send_with_retry(
      {endpoint_.max_retries, endpoint_.backoff}, "SPARQL " + endpoint_.sparql_url,
      [&] {
        pace();
        return client.Post(path, headers, body, "application/x-www-form-urlencoded");
      },
      ErrorCode::MalformedResponse);
  parse_body(response, "SPARQL response");
  cache_.put(query, response);
  return response;
}

std::string RemoteClient::get_entity_api(const std::string& query_string) {
  const std::string cache_text = "GET entity-api?" + query_string;
  if (auto hit = cache_.get(cache_text)) return *hit;
  if (cache_.policy() == CachePolicy::read_only) {
    throw Error(ErrorCode::CacheMiss, "entity lookup not cached (" + QueryCache::key(cache_text) + ")");
  }
  auto url = detail::split_url(endpoint_.entity_api_url);
  auto client = detail::make_client(url.origin, endpoint_.timeout);
  httplib::Headers headers{{"Accept", "application/json"}, {"User-Agent", endpoint_.user_agent}};
  const std::string target = (url.path.empty() ? "/" : url.path) + "?" + query_string;
  auto response = detail::send_with_retry(
      {endpoint_.max_retries, endpoint_.backoff}, "GET " + endpoint_.entity_api_url,
      [&] {
        pace();
        return client.Get(target, headers);
      },
      ErrorCode::MalformedResponse);
  parse_body(response, "entity API response");
  cache_.put(cache_text, response);
  return response;
}

std::vector<EntityCandidate> RemoteClient::resolve_entity(std::string_view name) {
  auto trimmed = QueryCache::canonical(name);
  if (trimmed.empty()) throw Error(ErrorCode::InvalidArgument, "entity name is empty");
  const std::string qs = "action=wbsearchentities&format=json&language=en&uselang=en&type=item&limit=10&search=" +
                         percent_encode(trimmed);
  auto doc = parse_body(get_entity_api(qs), "entity search");
  if (doc.is_object() && doc.contains("error")) {
    throw Error(ErrorCode::MalformedResponse, "entity search returned an error: " + doc["error"].dump());
  }
  if (!doc.is_object() || !doc.contains("search") || !doc["search"].is_array()) {
    throw Error(ErrorCode::MalformedResponse, "entity search response lacks a search array");
  }
  std::vector<EntityCandidate> out;
  for (const auto& hit : doc["search"]) {
    if (!hit.is_object() || !hit.contains("id") || !hit["id"].is_string()) {
      throw Error(ErrorCode::MalformedResponse, "search hit without an id");
    }
    EntityCandidate c;
    c.id = NodeId{hit["id"].get<std::string>()};
    c.label = hit.value("label", c.id.value);
    c.description = hit.value("description", "");
    out.push_back(std::move(c));
  }
  return out;
}

std::string RemoteClient::entity_label(const NodeId& x) {
  if (!is_remote_entity_id(x.value)) {
    throw Error(ErrorCode::InvalidArgument, "not a remote entity id: '" + x.value + "'");
  }
  auto doc = parse_body(sparql(render_query("label_lookup", x)), "label lookup");
  const auto& rows = sparql_bindings(doc, "label lookup");
  if (rows.empty()) throw Error(ErrorCode::UnknownEntity, "no such entity '" + x.value + "'");
  auto label = binding_value(rows.front(), "label");
  return label.value_or(x.value);
}

std::vector<RemoteNeighbor> RemoteClient::fetch_neighbors(const NodeId& x) {
  entity_label(x);
  std::vector<RemoteNeighbor> out;
  for (auto [tpl, dir] : {std::pair{"one_hop_out", Direction::out}, std::pair{"one_hop_in", Direction::in}}) {
    auto doc = parse_body(sparql(render_query(tpl, x)), tpl);
    for (const auto& row : sparql_bindings(doc, tpl)) {
      auto prop_uri = binding_value(row, "property");
      auto nb_uri = binding_value(row, "neighbor");
      if (!prop_uri || !nb_uri) throw Error(ErrorCode::MalformedResponse, std::string(tpl) + ": incomplete row");
      auto prop = strip_entity_prefix(*prop_uri);
      auto nb = strip_entity_prefix(*nb_uri);
      if (!prop || !is_property_id(*prop)) {
        throw Error(ErrorCode::MalformedResponse, "unexpected property IRI '" + *prop_uri + "'");
      }
      if (!nb || !is_remote_entity_id(*nb)) continue;
      if (!endpoint_.property_allowlist.empty() &&
          std::find(endpoint_.property_allowlist.begin(), endpoint_.property_allowlist.end(), *prop) ==
              endpoint_.property_allowlist.end()) {
        continue;
      }
      RemoteNeighbor n;
      n.node = Node{NodeId{*nb}, binding_value(row, "neighborLabel").value_or(*nb), "unknown"};
      n.label = RelationLabel{binding_value(row, "propertyLabel").value_or(*prop)};
      n.property = *prop;
      n.direction = dir;
      out.push_back(std::move(n));
    }
  }
  auto key = [](const RemoteNeighbor& n) {
    return std::tuple{numeric_part(n.property), numeric_part(n.node.id.value), n.direction == Direction::in};
  };
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  out.erase(std::unique(out.begin(), out.end(),
                        [&](const auto& a, const auto& b) { return key(a) == key(b); }),
            out.end());
  return out;
}

std::vector<EntityCandidate> resolve_entity(const RemoteEndpoint& endpoint, const QueryCache& cache,
                                            std::string_view name) {
  RemoteClient client(endpoint, cache);
  return client.resolve_entity(name);
}

std::vector<RemoteNeighbor> fetch_neighbors_remote(const RemoteEndpoint& endpoint, const QueryCache& cache,
                                                   const NodeId& x) {
  RemoteClient client(endpoint, cache);
  return client.fetch_neighbors(x);
}

KnowledgeGraph build_remote_subgraph(RemoteClient& client, const std::vector<NodeId>& seeds) {
  GraphBuilder b;
  std::vector<std::pair<NodeId, std::vector<RemoteNeighbor>>> fetched;
  for (const auto& x : seeds) {
    if (b.has_node(x)) continue;
    b.add_node(Node{x, client.entity_label(x), "unknown"});
    fetched.emplace_back(x, client.fetch_neighbors(x));
  }
  for (const auto& [x, neighbors] : fetched) {
    for (const auto& n : neighbors) {
      if (n.node.id == x) continue;
      if (!b.has_node(n.node.id)) b.add_node(n.node);
      if (n.direction == Direction::out) b.add_edge(x, n.node.id, n.label);
      else b.add_edge(n.node.id, x, n.label);
    }
  }
  return std::move(b).build();
}

}  // namespace kgprompt
