#pragma once

// Umbrella header for the uniformity library.

#include "uniformity/approx.hpp"
#include "uniformity/bounds.hpp"
#include "uniformity/box.hpp"
#include "uniformity/dataset.hpp"
#include "uniformity/error.hpp"
#include "uniformity/geometry.hpp"
#include "uniformity/ingest.hpp"
#include "uniformity/linalg.hpp"
#include "uniformity/network.hpp"
#include "uniformity/network_io.hpp"
#include "uniformity/parallel.hpp"
#include "uniformity/projection.hpp"
#include "uniformity/rng.hpp"
#include "uniformity/selection.hpp"
#include "uniformity/sweep.hpp"
#include "uniformity/trainer.hpp"

namespace uniformity {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace uniformity
