#pragma once

#include <cstdint>

#include "progdf/edit_oracle.hpp"
#include "progdf/types.hpp"

namespace progdf {

// Two clustered blobs of Gaussians with a recolor edit on the first one,
// viewed by a 16-camera orbit rig. Used by the CLI `scenario` command and
// the acceptance suite.
struct StandardScenario {
  Scene scene;
  EditSpec edit;
  RigConfig rig;      // training views
  RigConfig heldout;  // evaluation views, offset in azimuth
};

StandardScenario standard_scenario(std::uint64_t seed, int gaussians_per_blob = 100);

}  // namespace progdf
