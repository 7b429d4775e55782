#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csm/conditional.hpp"

namespace csm {

struct VariableHistogram {
  std::string name;
  Index component = 0;
  bool log_scale = false;     // natural log applied before binning
  bool levels = false;        // one bin per admissible level
  std::vector<double> edges;  // bins + 1 edges, or the levels themselves
  std::vector<double> mass;   // sums to 1
  double mean = 0.0;          // of the (possibly log-transformed) samples
  double stddev = 0.0;
  std::vector<double> samples;  // transformed samples
};

// Draws n samples of the named variables (component names as in the layout)
// and bins them. Binary, ordinal and level-declared discrete variables get
// one bin per level; continuous ones `bins` equal-width bins over the training
// range, and the layout's volume indicator is binned on the log scale.
// Throws InvalidTask for unknown names.
std::vector<VariableHistogram> sample_distribution_report(const ConditionalModel &model,
                                                          const std::vector<std::string> &names,
                                                          Index n = 1000, std::size_t bins = 20,
                                                          std::uint64_t seed = 0);

}  // namespace csm
