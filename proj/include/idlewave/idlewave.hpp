#pragma once

// Umbrella header: the whole library.

#include "idlewave/analysis.hpp"
#include "idlewave/app.hpp"
#include "idlewave/config.hpp"
#include "idlewave/engine.hpp"
#include "idlewave/network.hpp"
#include "idlewave/noise.hpp"
#include "idlewave/render.hpp"
#include "idlewave/rng.hpp"
#include "idlewave/topology.hpp"
#include "idlewave/trace.hpp"
#include "idlewave/types.hpp"
