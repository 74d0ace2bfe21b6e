#include "mkvlab/core/errors.hpp"
#include "mkvlab/core/philox.hpp"
#include "mkvlab/experiments/experiments.hpp"

namespace mkvlab {

std::uint64_t SeedPlan::at(int i) const { return mix_seed(base, static_cast<std::uint64_t>(i)); }

bool ExperimentReport::passed() const {
  if (verdicts.empty()) return false;
  for (const auto& v : verdicts)
    if (!v.passed) return false;
  return true;
}

const Quantity& ExperimentReport::quantity(const std::string& name) const {
  for (const auto& q : quantities)
    if (q.name == name) return q;
  throw RangeError("report '" + scenario + "' has no quantity '" + name + "'");
}

const Verdict& ExperimentReport::verdict(const std::string& criterion) const {
  for (const auto& v : verdicts)
    if (v.criterion == criterion) return v;
  throw RangeError("report '" + scenario + "' has no verdict '" + criterion + "'");
}

}  // namespace mkvlab
