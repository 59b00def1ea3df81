#include "ambiprobe/error.hpp"

namespace ambiprobe {
namespace {

std::string describe_missing(const std::vector<std::string>& ids) {
  std::string msg = "embedding dump is missing sides for " +
                    std::to_string(ids.size()) + " pair(s):";
  for (const auto& id : ids) msg += " " + id;
  return msg;
}

}  // namespace

CompletenessError::CompletenessError(std::vector<std::string> pair_ids)
    : Error(describe_missing(pair_ids)), pair_ids_(std::move(pair_ids)) {}

}  // namespace ambiprobe
