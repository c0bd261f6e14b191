#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "kgprompt/graph.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return KGPROMPT_TEST_DATA_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("kgprompt_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline kgprompt::Node node(const std::string& id, const std::string& name, const std::string& type = "unknown") {
  return {{id}, name, type};
}

/// prostate cancer and its five labeled neighbors.
inline kgprompt::KnowledgeGraph neighbor_figure() {
  kgprompt::GraphBuilder b;
  b.add_node(node("Q181257", "prostate cancer", "disease"));
  b.add_node(node("Q415426", "nilutamide", "compound"));
  b.add_node(node("Q5015972", "cabazitaxel", "compound"));
  b.add_node(node("Q1476149", "urology", "specialty"));
  b.add_node(node("Q14875349", "FSHR", "gene"));
  b.add_node(node("Q20774042", "F6F10", "gene"));
  const kgprompt::NodeId pc{"Q181257"};
  b.add_edge(pc, {"Q415426"}, {"drug or therapy used for treatment"});
  b.add_edge(pc, {"Q5015972"}, {"drug or therapy used for treatment"});
  b.add_edge(pc, {"Q1476149"}, {"health specialty"});
  b.add_edge(pc, {"Q14875349"}, {"genetic association"});
  b.add_edge(pc, {"Q20774042"}, {"genetic association"});
  return std::move(b).build();
}

/// Two-gene metapath figure: FGF6, FGFR4, prostate cancer, prostate.
inline kgprompt::KnowledgeGraph metapath_figure() {
  kgprompt::GraphBuilder b;
  b.add_node(node("FGF6", "FGF6", "gene"));
  b.add_node(node("FGFR4", "FGFR4", "gene"));
  b.add_node(node("PC", "prostate cancer", "disease"));
  b.add_node(node("PR", "prostate", "anatomy"));
  b.add_edge({"FGF6"}, {"FGFR4"}, {"interacts with"});
  b.add_edge({"FGFR4"}, {"PC"}, {"associates with"});
  b.add_edge({"FGF6"}, {"PR"}, {"expressed in"});
  b.add_edge({"PC"}, {"PR"}, {"localizes to"});
  return std::move(b).build();
}

/// The single four-hop path of the long metapath example.
inline kgprompt::KnowledgeGraph long_path_figure() {
  kgprompt::GraphBuilder b;
  b.add_node(node("FGF6", "FGF6", "gene"));
  b.add_node(node("TEN", "tendon", "anatomy"));
  b.add_node(node("SQRDL", "SQRDL", "gene"));
  b.add_node(node("FGFR2", "FGFR2", "gene"));
  b.add_node(node("PC", "prostate cancer", "disease"));
  b.add_edge({"FGF6"}, {"TEN"}, {"expressed in"});
  b.add_edge({"TEN"}, {"SQRDL"}, {"expresses"});
  b.add_edge({"FGFR2"}, {"SQRDL"}, {"regulates"});
  b.add_edge({"FGFR2"}, {"PC"}, {"associates with"});
  return std::move(b).build();
}

/// breast cancer and ERBB2 share exactly five neighbors and are joined directly.
inline kgprompt::KnowledgeGraph common_neighbor_figure() {
  kgprompt::GraphBuilder b;
  b.add_node(node("BC", "breast cancer", "disease"));
  b.add_node(node("ERBB2", "ERBB2", "gene"));
  const char* shared[][3] = {{"ADH5", "ADH5", "gene"},
                             {"MG", "mammary gland", "anatomy"},
                             {"EXE", "exemestane", "compound"},
                             {"TGFBR2", "TGFBR2", "gene"},
                             {"DPYSL2", "DPYSL2", "gene"}};
  for (auto& s : shared) b.add_node(node(s[0], s[1], s[2]));
  b.add_node(node("ONLY", "only breast", "gene"));
  for (auto& s : shared) {
    b.add_edge({"BC"}, {s[0]}, {"associates with"});
    b.add_edge({"ERBB2"}, {s[0]}, {"interacts with"});
  }
  b.add_edge({"BC"}, {"ONLY"}, {"associates with"});
  b.add_edge({"ERBB2"}, {"BC"}, {"associates with"});
  return std::move(b).build();
}

}  // namespace fixtures
