#pragma once

#include "hbnf/discretize.hpp"
#include "hbnf/model.hpp"

#include <stdexcept>
#include <string>

namespace hbnf {

/// A network plus any explicitly pinned discretizations.
struct ModelFile {
  BayesianNetwork network;
  PartitionMap partitions;
};

struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parses the on-disk JSON form. Malformed documents and unparsable
/// expressions raise ModelError naming the node (and byte offset for
/// expression errors); semantic problems are left to validate().
ModelFile parse_model(const std::string& json_text);
ModelFile load_model(const std::string& path);

std::string serialize_model(const ModelFile& m);
void save_model(const ModelFile& m, const std::string& path);

}  // namespace hbnf
