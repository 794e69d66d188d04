#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "simex/graph.hpp"
#include "simex/rng.hpp"

namespace simex::testing {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("simex_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Erdos-Renyi graph with gaussian features; guaranteed at least one edge.
inline Graph random_graph(int n, double p, int feature_dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform() < p) edges.push_back({u, v});
  if (edges.empty() && n > 1) edges.push_back({0, 1});
  Matrix x(n, feature_dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < feature_dim; ++j) x(i, j) = rng.normal();
  return Graph(std::move(edges), std::move(x));
}

}  // namespace simex::testing
