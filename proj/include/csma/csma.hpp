#pragma once

#include "csma/allocation.hpp"
#include "csma/analytics.hpp"
#include "csma/channel.hpp"
#include "csma/config.hpp"
#include "csma/constellation.hpp"
#include "csma/dft.hpp"
#include "csma/distance.hpp"
#include "csma/error.hpp"
#include "csma/framing.hpp"
#include "csma/harness.hpp"
#include "csma/ofdm.hpp"
#include "csma/report_io.hpp"
#include "csma/rng.hpp"
