#pragma once

// Hand-authored stand-in for the public SPARQL endpoint and entity search
// API, served over loopback. Statement ids follow the live items where
// they are known; the rest are made up.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "kgprompt/remote.hpp"
#include "support/stub_server.hpp"

namespace fixtures {

struct FakeStatement {
  std::string subject;
  std::string property;
  std::string value;  // item id, or a literal when it does not start with Q
};

class FakeWikidata {
 public:
  std::map<std::string, std::string> items{
      {"Q181257", "prostate cancer"}, {"Q415426", "nilutamide"},   {"Q5015972", "cabazitaxel"},
      {"Q1476149", "urology"},        {"Q14875349", "FSHR"},       {"Q20774042", "F6F10"},
      {"Q12136", "disease"},          {"Q662860", "smoking"},      {"Q3241045", "prostate cancer screening"}};
  std::map<std::string, std::string> properties{{"P31", "instance of"},
                                                {"P2176", "drug or therapy used for treatment"},
                                                {"P1995", "health specialty"},
                                                {"P2293", "genetic association"},
                                                {"P1542", "has effect"},
                                                {"P1748", "NCI Thesaurus ID"}};
  // Deliberately unsorted.
  std::vector<FakeStatement> statements{{"Q181257", "P2293", "Q20774042"},
                                        {"Q181257", "P2176", "Q5015972"},
                                        {"Q181257", "P1748", "C7378"},
                                        {"Q181257", "P2176", "Q415426"},
                                        {"Q181257", "P31", "Q12136"},
                                        {"Q181257", "P1995", "Q1476149"},
                                        {"Q181257", "P2293", "Q14875349"},
                                        {"Q662860", "P1542", "Q181257"}};

  std::atomic<int> sparql_calls{0};
  std::atomic<int> search_calls{0};
  /// Answer this many SPARQL requests with the given status before serving.
  std::atomic<int> failures_left{0};
  int failure_status = 503;

  void start() {
    stub_.server().Post("/sparql", [this](const httplib::Request& rq, httplib::Response& rs) { sparql(rq, rs); });
    stub_.server().Get("/w/api.php", [this](const httplib::Request& rq, httplib::Response& rs) { search(rq, rs); });
    stub_.start();
  }
  void stop() { stub_.stop(); }

  kgprompt::RemoteEndpoint endpoint() const {
    kgprompt::RemoteEndpoint ep;
    ep.sparql_url = stub_.url() + "/sparql";
    ep.entity_api_url = stub_.url() + "/w/api.php";
    ep.timeout = std::chrono::milliseconds(2'000);
    ep.max_retries = 2;
    ep.backoff = std::chrono::milliseconds(5);
    ep.politeness_delay = std::chrono::milliseconds(1);
    return ep;
  }

 private:
  static nlohmann::json uri(const std::string& id) {
    return {{"type", "uri"}, {"value", "http://www.wikidata.org/entity/" + id}};
  }
  static nlohmann::json literal(const std::string& v) {
    return {{"type", "literal"}, {"xml:lang", "en"}, {"value", v}};
  }

  void sparql(const httplib::Request& rq, httplib::Response& rs) {
    ++sparql_calls;
    if (failures_left > 0) {
      --failures_left;
      rs.status = failure_status;
      if (failure_status == 429) rs.set_header("Retry-After", "0");
      return;
    }
    const auto query = rq.get_param_value("query");
    std::smatch m;
    if (!std::regex_search(query, m, std::regex("wd:(Q[0-9]+)"))) {
      rs.status = 400;
      return;
    }
    const std::string entity = m[1];
    nlohmann::json rows = nlohmann::json::array();
    if (query.rfind("# English label", 0) == 0) {
      if (items.count(entity)) rows.push_back({{"label", literal(items.at(entity))}});
    } else {
      const bool outgoing = query.rfind("# Outgoing", 0) == 0;
      for (const auto& s : statements) {
        const auto& anchor = outgoing ? s.subject : s.value;
        if (anchor != entity) continue;
        const auto& other = outgoing ? s.value : s.subject;
        nlohmann::json row{{"property", uri(s.property)}, {"propertyLabel", literal(properties.at(s.property))}};
        if (other.rfind("Q", 0) == 0) {
          row["neighbor"] = uri(other);
          row["neighborLabel"] = literal(items.count(other) ? items.at(other) : other);
        } else {
          row["neighbor"] = literal(other);
        }
        rows.push_back(row);
      }
    }
    nlohmann::json doc{{"head", {{"vars", nlohmann::json::array()}}}, {"results", {{"bindings", rows}}}};
    rs.set_content(doc.dump(), "application/sparql-results+json");
  }

  void search(const httplib::Request& rq, httplib::Response& rs) {
    ++search_calls;
    const auto term = rq.get_param_value("search");
    nlohmann::json hits = nlohmann::json::array();
    for (const auto& [id, label] : items) {
      if (label.rfind(term, 0) == 0) hits.push_back({{"id", id}, {"label", label}, {"description", "fake"}});
    }
    // Exact label first, as the live API ranks it.
    std::stable_sort(hits.begin(), hits.end(), [&](const nlohmann::json& a, const nlohmann::json& b) {
      return (a["label"] == term) > (b["label"] == term);
    });
    rs.set_content(nlohmann::json{{"searchinfo", {{"search", term}}}, {"search", hits}}.dump(), "application/json");
  }

  StubServer stub_;
};

}  // namespace fixtures
