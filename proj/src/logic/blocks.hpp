#pragma once

#include <vector>

#include "dhcosim/logic/logic.hpp"

namespace dhcosim::logic {

void validate_params(const CompiledBlock& b);
std::vector<double> initial_memory(const CompiledBlock& b);

// One update of a non-delay, non-input block. `primed` is false until the
// block has run once since the last reset.
void evaluate(const CompiledBlock& b, const double* in, double* out, std::vector<double>& mem,
              char& primed, double dt);

}  // namespace dhcosim::logic
