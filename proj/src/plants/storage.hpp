#pragma once

#include <string>
#include <vector>

namespace dhcosim::plants::detail {

struct StorageMove {
  double E = 0.0;    // energy after the step
  double Pch = 0.0;  // realised charge power
  double Pdis = 0.0; // realised discharge power
  double clipped_mwh = 0.0;
};

// Integrates the lossless tank for one step. Commands are limited to the power
// rating and the net flow is clipped so E stays within [0, capacity]; every
// clip is reported in `violations`.
StorageMove move_storage(double E, double ch_cmd, double dis_cmd, double dt_h, double capacity,
                         double power, std::vector<std::string>& violations);

}  // namespace dhcosim::plants::detail
