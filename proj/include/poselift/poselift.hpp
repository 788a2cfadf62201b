#pragma once

// Umbrella header for the poselift library.

#include "poselift/camera.hpp"
#include "poselift/dictionary.hpp"
#include "poselift/error.hpp"
#include "poselift/io.hpp"
#include "poselift/lifter.hpp"
#include "poselift/limits.hpp"
#include "poselift/metrics.hpp"
#include "poselift/noise.hpp"
#include "poselift/pipeline.hpp"
#include "poselift/pose.hpp"
#include "poselift/signal.hpp"
#include "poselift/temporal.hpp"
#include "poselift/topology.hpp"
