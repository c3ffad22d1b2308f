#pragma once

#include "qtrack/bloch.hpp"
#include "qtrack/butterworth.hpp"
#include "qtrack/discrete.hpp"
#include "qtrack/error.hpp"
#include "qtrack/estimate.hpp"
#include "qtrack/hybrid.hpp"
#include "qtrack/io.hpp"
#include "qtrack/music.hpp"
#include "qtrack/periodogram.hpp"
#include "qtrack/quinn_fernandes.hpp"
#include "qtrack/rng.hpp"
#include "qtrack/sme.hpp"
#include "qtrack/harness/config.hpp"
#include "qtrack/harness/experiments.hpp"
#include "qtrack/harness/parallel.hpp"
#include "qtrack/harness/results.hpp"
#include "qtrack/harness/tracking.hpp"
