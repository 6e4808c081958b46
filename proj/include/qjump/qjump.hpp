// Umbrella header for the two-atom quantum-jump library.
#pragma once

#define QJUMP_VERSION "0.1.0"

#include "qjump/core.hpp"
#include "qjump/dynamics.hpp"
#include "qjump/emission.hpp"
#include "qjump/master.hpp"
#include "qjump/observables.hpp"
#include "qjump/quadrature.hpp"
#include "qjump/random.hpp"
#include "qjump/trajectory.hpp"
