#include <algorithm>
#include <string>

#include "subleq/bench.hpp"
#include "subleq/corpus_data.hpp"
#include "subleq/error.hpp"

namespace subleq::bench {

std::string_view corpus_file(std::string_view name) {
  for (const auto& [file, text] : corpus_data::kFiles)
    if (file == name) return text;
  throw Error(Errc::io, "no corpus file '" + std::string(name) + "'");
}

std::vector<std::string_view> corpus_names() {
  std::vector<std::string_view> names;
  for (const auto& entry : corpus_data::kFiles) names.push_back(entry.first);
  return names;
}

}  // namespace subleq::bench
